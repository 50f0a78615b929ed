#pragma once

#include <vector>

#include "cbml/matrix.hpp"

namespace cbml {

/// n unit-norm embeddings with their integer class labels.
struct EmbeddingBatch {
  Matrix data;              // n x d, every row on the unit sphere
  std::vector<int> labels;  // length n

  std::size_t size() const { return data.rows; }
  std::size_t dim() const { return data.cols; }
};

/// Symmetric n x n cosine similarity matrix with unit diagonal.
struct SimilarityMatrix {
  Matrix values;

  std::size_t size() const { return values.rows; }
  double operator()(std::size_t i, std::size_t j) const { return values(i, j); }
};

/// Projects every row of `raw` onto the unit sphere. Throws ZeroNormRow if a
/// row's norm falls below 1e-12; nothing sensible points nowhere.
Matrix normalize_rows(const Matrix& raw);

/// Validates shapes (n >= 2, d >= 1, one label per row), normalizes, bundles.
EmbeddingBatch make_embedding_batch(Matrix raw, std::vector<int> labels);

/// Pairwise cosine similarities of an already-normalized batch. Exploits
/// symmetry: each off-diagonal entry is computed once and mirrored.
SimilarityMatrix similarity_matrix(const EmbeddingBatch& batch);

}  // namespace cbml
