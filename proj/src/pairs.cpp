#include "cbml/pairs.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "cbml/errors.hpp"

namespace cbml {

PairIndex partition_pairs(const std::vector<int>& labels) {
  const std::size_t n = labels.size();
  std::set<int> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) {
    throw InsufficientClasses("pair partition needs at least two distinct labels");
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  PairIndex index;
  index.anchors.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    AnchorPairs& a = index.anchors[i];
    a.max_negative_sim = nan;
    a.min_positive_sim = nan;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (labels[j] == labels[i]) {
        a.positives.push_back(static_cast<int>(j));
      } else {
        a.negatives.push_back(static_cast<int>(j));
      }
    }
  }
  return index;
}

PairIndex mine_hard_pairs(const SimilarityMatrix& sims, const PairIndex& pairs,
                          double epsilon) {
  if (sims.size() != pairs.size()) {
    throw DimMismatch("similarity matrix and pair index cover different batch sizes");
  }
  PairIndex mined = pairs;
  for (std::size_t i = 0; i < mined.size(); ++i) {
    AnchorPairs& a = mined.anchors[i];
    a.hard_positives.clear();
    a.hard_negatives.clear();
    if (a.positives.empty() || a.negatives.empty()) {
      // No opposing side, so no threshold to compare against: the anchor
      // contributes nothing to the mined loss.
      continue;
    }
    double max_neg = -std::numeric_limits<double>::infinity();
    for (int j : a.negatives) {
      max_neg = std::max(max_neg, sims(i, static_cast<std::size_t>(j)));
    }
    double min_pos = std::numeric_limits<double>::infinity();
    for (int j : a.positives) {
      min_pos = std::min(min_pos, sims(i, static_cast<std::size_t>(j)));
    }
    a.max_negative_sim = max_neg;
    a.min_positive_sim = min_pos;
    for (int j : a.positives) {
      if (sims(i, static_cast<std::size_t>(j)) < max_neg + epsilon) {
        a.hard_positives.push_back(j);
      }
    }
    for (int j : a.negatives) {
      if (sims(i, static_cast<std::size_t>(j)) > min_pos - epsilon) {
        a.hard_negatives.push_back(j);
      }
    }
  }
  return mined;
}

}  // namespace cbml
