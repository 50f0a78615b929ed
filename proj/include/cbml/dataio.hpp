#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cbml/matrix.hpp"

namespace cbml {

/// Labeled feature rows plus a class-to-row index for balanced sampling.
struct FeatureDataset {
  Matrix features;
  std::vector<int> labels;
  std::map<int, std::vector<int>> class_index;

  std::size_t size() const { return features.rows; }
  std::size_t dim() const { return features.cols; }
};

/// Validates shapes and builds the class index.
FeatureDataset make_dataset(Matrix features, std::vector<int> labels);

/// Explicit class-disjoint split assignment.
struct SplitSpec {
  std::set<int> train_classes;
  std::set<int> test_classes;
};

/// CSV with header `label,f0,...,f{d-1}`, one integer label plus d reals per
/// row. Row order is preserved.
FeatureDataset load_csv(const std::string& path);

/// Inverse of load_csv; reals serialized with 17 significant digits so the
/// round trip is lossless.
void save_csv(const std::string& path, const FeatureDataset& dataset);

/// Gaussian class blobs: centers uniform on the sphere of radius
/// center_scale, points = center + isotropic noise of the given sigma.
FeatureDataset synth_blobs(int classes, int per_class, int dim,
                           double center_scale, double noise_sigma,
                           std::uint64_t seed);

/// Class-disjoint split. The fractional form sends the first
/// ceil(fraction * #classes) class ids (ascending) to the train side.
std::pair<FeatureDataset, FeatureDataset> split_by_class(
    const FeatureDataset& dataset, double fraction);

std::pair<FeatureDataset, FeatureDataset> split_by_class(
    const FeatureDataset& dataset, const SplitSpec& spec);

}  // namespace cbml
