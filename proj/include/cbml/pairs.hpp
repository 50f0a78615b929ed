#pragma once

#include <vector>

#include "cbml/geometry.hpp"

namespace cbml {

/// Pair bookkeeping for one anchor. `positives`/`negatives` are the full
/// same-class / other-class index sets; the `hard_` sets and thresholds are
/// filled in by mine_hard_pairs and stay empty / NaN until then.
struct AnchorPairs {
  std::vector<int> positives;
  std::vector<int> negatives;
  std::vector<int> hard_positives;
  std::vector<int> hard_negatives;
  double max_negative_sim;  // highest similarity among negatives, NaN if none
  double min_positive_sim;  // lowest similarity among positives, NaN if none
};

struct PairIndex {
  std::vector<AnchorPairs> anchors;

  std::size_t size() const { return anchors.size(); }
};

/// Splits every index j != i into same-label positives and other-label
/// negatives, per anchor i. Requires at least two distinct labels.
PairIndex partition_pairs(const std::vector<int>& labels);

/// Keeps, per anchor, the positives below (max negative sim + epsilon) and
/// the negatives above (min positive sim - epsilon): the pairs that still
/// carry training signal. An anchor missing one side keeps both hard sets
/// empty, since neither threshold exists for it.
PairIndex mine_hard_pairs(const SimilarityMatrix& sims, const PairIndex& pairs,
                          double epsilon);

}  // namespace cbml
