#pragma once

#include <cstdint>

#include "cbml/loss.hpp"

namespace cbml {

/// Central-difference comparison of the analytical gradient on one batch.
/// Mining decisions and variance targets are frozen at the unperturbed
/// point, matching what the analytical gradient treats as constant.
/// Returns the worst relative error over all entries (absolute error where
/// the reference magnitude is below 1e-6).
double max_gradient_error(const Matrix& raw, const std::vector<int>& labels,
                          const LossConfig& cfg, double step);

struct GradCheckSummary {
  double max_error = 0.0;
  int batches = 0;
};

/// Random batches (16 anchors, 8 dims, 4 classes) cycled through every
/// averaging variant with and without the variance penalty.
GradCheckSummary run_gradient_check(int batches, std::uint64_t seed);

}  // namespace cbml
