#pragma once

#include <vector>

#include "cbml/geometry.hpp"
#include "cbml/pairs.hpp"

namespace cbml {

/// Moment fit of the positive- and negative-pair similarity samples.
struct GaussianFit {
  double mu_pos = 0.0;
  double sigma_pos = 0.0;
  double mu_neg = 0.0;
  double sigma_neg = 0.0;
};

/// The positive/negative density ratio as varsigma * exp(zeta1*z^2 +
/// zeta2*z + zeta3). zeta1 is exactly zero for equal-variance fits.
struct RatioFit {
  double varsigma = 1.0;
  double zeta1 = 0.0;
  double zeta2 = 0.0;
  double zeta3 = 0.0;
};

/// Single-exponent simplification of the ratio: exp(slope*z + intercept).
/// Exact when the two variances agree; otherwise the tangent of the
/// quadratic log-ratio at the inter-mean midpoint.
struct LinearRatioFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Positive-to-negative prior odds for one anchor: |P_i| / |N_i|.
struct PriorRatio {
  double theta = 1.0;
};

struct Posteriors {
  double p_pos = 0.0;
  double p_neg = 0.0;
};

/// Unbiased mean/stddev over the unique (i < j) positive and negative pair
/// similarities of a batch. Needs two samples and nonzero spread per side.
GaussianFit fit_similarity_gaussians(const SimilarityMatrix& sims,
                                     const PairIndex& pairs);

RatioFit ratio_fit(const GaussianFit& fit);

LinearRatioFit linear_ratio_fit(const GaussianFit& fit);

/// log of the density ratio at similarity z.
double log_density_ratio(double z, const RatioFit& rf);

/// Density ratio favouring "negative": large when z looks positive-like.
double phi_n(double z, const RatioFit& rf);

/// Reciprocal ratio favouring "positive". phi_n * phi_p == 1 identically.
double phi_p(double z, const RatioFit& rf);

/// Throws UndefinedPriorRatio when the anchor lacks positives or negatives.
PriorRatio prior_ratio(const AnchorPairs& anchor);

/// Closed-form class posteriors for one pair given the density ratio value
/// and the prior odds. Always sums to 1 up to rounding.
Posteriors posteriors(double phi_n_value, const PriorRatio& theta);

/// Plain helpers used by the averaging analysis and its tests.
double arithmetic_mean(const std::vector<double>& values);
double harmonic_mean(const std::vector<double>& values);

}  // namespace cbml
