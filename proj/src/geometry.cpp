#include "cbml/geometry.hpp"

#include <cmath>
#include <utility>

#include "cbml/errors.hpp"

namespace cbml {

Matrix normalize_rows(const Matrix& raw) {
  Matrix out(raw.rows, raw.cols);
  for (std::size_t i = 0; i < raw.rows; ++i) {
    const double* v = raw.row(i);
    const double norm = std::sqrt(dot(v, v, raw.cols));
    if (norm < 1e-12) {
      throw ZeroNormRow(i);
    }
    double* u = out.row(i);
    for (std::size_t j = 0; j < raw.cols; ++j) {
      u[j] = v[j] / norm;
    }
  }
  return out;
}

EmbeddingBatch make_embedding_batch(Matrix raw, std::vector<int> labels) {
  if (raw.rows < 2) {
    throw DimMismatch("embedding batch needs at least two rows");
  }
  if (raw.cols < 1) {
    throw DimMismatch("embedding batch needs at least one feature column");
  }
  if (labels.size() != raw.rows) {
    throw LengthMismatch("label count does not match row count");
  }
  EmbeddingBatch batch;
  batch.data = normalize_rows(raw);
  batch.labels = std::move(labels);
  return batch;
}

SimilarityMatrix similarity_matrix(const EmbeddingBatch& batch) {
  const std::size_t n = batch.size();
  const std::size_t d = batch.dim();
  SimilarityMatrix sims;
  sims.values = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    sims.values(i, i) = dot(batch.data.row(i), batch.data.row(i), d);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = dot(batch.data.row(i), batch.data.row(j), d);
      sims.values(i, j) = s;
      sims.values(j, i) = s;
    }
  }
  return sims;
}

}  // namespace cbml
