#include <algorithm>
#include <cmath>
#include <vector>

#include "cbml/errors.hpp"
#include "cbml/pairs.hpp"
#include "cbml/rng.hpp"
#include "doctest.h"
#include "test_util.hpp"

using cbml::Matrix;
using cbml::PairIndex;
using cbml::SimilarityMatrix;

namespace {

SimilarityMatrix sims_from(const std::vector<std::vector<double>>& upper) {
  const std::size_t n = upper.size() + 1;
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      m(i, j) = upper[i][j - i - 1];
      m(j, i) = m(i, j);
    }
  }
  return SimilarityMatrix{m};
}

bool is_subset(const std::vector<int>& small, const std::vector<int>& big) {
  return std::all_of(small.begin(), small.end(), [&big](int v) {
    return std::find(big.begin(), big.end(), v) != big.end();
  });
}

}  // namespace

TEST_CASE("partition_pairs splits alternating labels") {
  PairIndex p = cbml::partition_pairs({0, 1, 0, 1});
  CHECK(p.anchors[0].positives == std::vector<int>{2});
  CHECK(p.anchors[0].negatives == std::vector<int>{1, 3});
  CHECK(p.anchors[1].positives == std::vector<int>{3});
  CHECK(p.anchors[1].negatives == std::vector<int>{0, 2});
}

TEST_CASE("partition_pairs needs two classes") {
  CHECK_THROWS_AS(cbml::partition_pairs({5, 5, 5}), cbml::InsufficientClasses);
}

TEST_CASE("partition covers every other index exactly once") {
  cbml::Rng rng(3);
  std::vector<int> labels(20);
  for (int& l : labels) l = static_cast<int>(rng.uniform_index(4));
  labels[0] = 0;
  labels[1] = 1;  // guarantee two classes
  PairIndex p = cbml::partition_pairs(labels);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& a = p.anchors[i];
    CHECK(a.positives.size() + a.negatives.size() == labels.size() - 1);
    for (int j : a.positives) CHECK(labels[static_cast<std::size_t>(j)] == labels[i]);
    for (int j : a.negatives) CHECK(labels[static_cast<std::size_t>(j)] != labels[i]);
  }
}

TEST_CASE("mining keeps only pairs inside the margin band") {
  // Anchor 0: positives at 0.9 and 0.4, negatives at 0.5 and 0.1.
  SimilarityMatrix s = sims_from({{0.9, 0.4, 0.5, 0.1},
                                  {0.8, 0.2, 0.15},
                                  {0.3, 0.25},
                                  {0.7}});
  PairIndex base = cbml::partition_pairs({0, 0, 0, 1, 1});
  PairIndex mined = cbml::mine_hard_pairs(s, base, 0.0);
  const auto& a = mined.anchors[0];
  // easy positive 0.9 sits above the worst negative, easy negative 0.1 below
  // the worst positive; both drop out at epsilon zero.
  CHECK(a.hard_positives == std::vector<int>{2});
  CHECK(a.hard_negatives == std::vector<int>{3});
  CHECK(a.max_negative_sim == doctest::Approx(0.5));
  CHECK(a.min_positive_sim == doctest::Approx(0.4));
}

TEST_CASE("mining a well-separated anchor yields empty hard sets") {
  SimilarityMatrix s = sims_from({{0.9, -0.5, -0.6},
                                  {-0.55, -0.45},
                                  {0.8}});
  PairIndex base = cbml::partition_pairs({0, 0, 1, 1});
  PairIndex mined = cbml::mine_hard_pairs(s, base, 0.1);
  CHECK(mined.anchors[0].hard_positives.empty());
  CHECK(mined.anchors[0].hard_negatives.empty());
}

TEST_CASE("an anchor with no positives mines nothing") {
  SimilarityMatrix s = sims_from({{0.9, 0.5}, {0.4}});
  PairIndex base = cbml::partition_pairs({0, 0, 1});
  PairIndex mined = cbml::mine_hard_pairs(s, base, 2.5);
  CHECK(mined.anchors[2].positives.empty());
  CHECK_FALSE(mined.anchors[2].negatives.empty());
  CHECK(mined.anchors[2].hard_negatives.empty());
  CHECK(std::isnan(mined.anchors[2].min_positive_sim));
}

TEST_CASE("a wide margin admits every pair") {
  cbml::Rng rng(7);
  auto batch = testutil::random_batch(rng, 14, 6, 3);
  auto b = cbml::make_embedding_batch(batch.raw, batch.labels);
  auto s = cbml::similarity_matrix(b);
  PairIndex base = cbml::partition_pairs(batch.labels);
  PairIndex mined = cbml::mine_hard_pairs(s, base, 2.5);
  for (std::size_t i = 0; i < mined.size(); ++i) {
    CHECK(mined.anchors[i].hard_positives == mined.anchors[i].positives);
    CHECK(mined.anchors[i].hard_negatives == mined.anchors[i].negatives);
  }
}

TEST_CASE("hard sets are nested subsets as the margin grows") {
  cbml::Rng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    auto batch = testutil::random_batch(rng, 12, 5, 4);
    auto b = cbml::make_embedding_batch(batch.raw, batch.labels);
    auto s = cbml::similarity_matrix(b);
    PairIndex base = cbml::partition_pairs(batch.labels);
    PairIndex narrow = cbml::mine_hard_pairs(s, base, 0.05);
    PairIndex wide = cbml::mine_hard_pairs(s, base, 0.5);
    for (std::size_t i = 0; i < base.size(); ++i) {
      CHECK(is_subset(narrow.anchors[i].hard_positives, wide.anchors[i].hard_positives));
      CHECK(is_subset(narrow.anchors[i].hard_negatives, wide.anchors[i].hard_negatives));
      CHECK(is_subset(wide.anchors[i].hard_positives, base.anchors[i].positives));
      CHECK(is_subset(wide.anchors[i].hard_negatives, base.anchors[i].negatives));
    }
  }
}
