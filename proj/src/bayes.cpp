#include "cbml/bayes.hpp"

#include <cmath>

#include "cbml/errors.hpp"

namespace cbml {

namespace {

struct MomentAccumulator {
  std::size_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double v) {
    ++count;
    sum += v;
    sum_sq += v * v;
  }

  double mean() const { return sum / static_cast<double>(count); }

  double stddev() const {
    const double n = static_cast<double>(count);
    // Unbiased variance; clamp tiny negative rounding residue.
    double var = (sum_sq - sum * sum / n) / (n - 1.0);
    if (var < 0.0) var = 0.0;
    return std::sqrt(var);
  }
};

}  // namespace

GaussianFit fit_similarity_gaussians(const SimilarityMatrix& sims,
                                     const PairIndex& pairs) {
  if (sims.size() != pairs.size()) {
    throw DimMismatch("similarity matrix and pair index cover different batch sizes");
  }
  MomentAccumulator pos, neg;
  const std::size_t n = sims.size();
  for (std::size_t i = 0; i < n; ++i) {
    // Only j > i so each unordered pair is counted once.
    for (int j : pairs.anchors[i].positives) {
      if (static_cast<std::size_t>(j) > i) pos.add(sims(i, static_cast<std::size_t>(j)));
    }
    for (int j : pairs.anchors[i].negatives) {
      if (static_cast<std::size_t>(j) > i) neg.add(sims(i, static_cast<std::size_t>(j)));
    }
  }
  if (pos.count < 2) {
    throw InsufficientPairs("need at least two positive-pair similarities to fit");
  }
  if (neg.count < 2) {
    throw InsufficientPairs("need at least two negative-pair similarities to fit");
  }
  GaussianFit fit;
  fit.mu_pos = pos.mean();
  fit.sigma_pos = pos.stddev();
  fit.mu_neg = neg.mean();
  fit.sigma_neg = neg.stddev();
  if (fit.sigma_pos < 1e-12) {
    throw InsufficientVariance("positive-pair similarities are (nearly) constant");
  }
  if (fit.sigma_neg < 1e-12) {
    throw InsufficientVariance("negative-pair similarities are (nearly) constant");
  }
  return fit;
}

RatioFit ratio_fit(const GaussianFit& fit) {
  const double vp = fit.sigma_pos * fit.sigma_pos;
  const double vn = fit.sigma_neg * fit.sigma_neg;
  RatioFit rf;
  rf.varsigma = fit.sigma_neg / fit.sigma_pos;
  rf.zeta1 = 1.0 / (2.0 * vn) - 1.0 / (2.0 * vp);
  rf.zeta2 = fit.mu_pos / vp - fit.mu_neg / vn;
  rf.zeta3 = fit.mu_neg * fit.mu_neg / (2.0 * vn) - fit.mu_pos * fit.mu_pos / (2.0 * vp);
  return rf;
}

LinearRatioFit linear_ratio_fit(const GaussianFit& fit) {
  const RatioFit rf = ratio_fit(fit);
  // Tangent of the quadratic log-ratio at the inter-mean midpoint. For equal
  // variances zeta1 is zero and this is the ratio itself, not an
  // approximation.
  const double z0 = 0.5 * (fit.mu_pos + fit.mu_neg);
  LinearRatioFit lf;
  lf.slope = 2.0 * rf.zeta1 * z0 + rf.zeta2;
  lf.intercept = std::log(rf.varsigma) + rf.zeta3 - rf.zeta1 * z0 * z0;
  return lf;
}

double log_density_ratio(double z, const RatioFit& rf) {
  return std::log(rf.varsigma) + (rf.zeta1 * z + rf.zeta2) * z + rf.zeta3;
}

double phi_n(double z, const RatioFit& rf) {
  const double exponent = (rf.zeta1 * z + rf.zeta2) * z + rf.zeta3;
  if (std::abs(exponent) > 500.0) {
    // Fold the prefactor into the exponent so intermediate products cannot
    // overflow before the final exp.
    return std::exp(std::log(rf.varsigma) + exponent);
  }
  return rf.varsigma * std::exp(exponent);
}

double phi_p(double z, const RatioFit& rf) {
  const double exponent = (rf.zeta1 * z + rf.zeta2) * z + rf.zeta3;
  if (std::abs(exponent) > 500.0) {
    return std::exp(-std::log(rf.varsigma) - exponent);
  }
  return std::exp(-exponent) / rf.varsigma;
}

PriorRatio prior_ratio(const AnchorPairs& anchor) {
  if (anchor.negatives.empty() || anchor.positives.empty()) {
    throw UndefinedPriorRatio("anchor needs both positives and negatives for a prior ratio");
  }
  PriorRatio pr;
  pr.theta = static_cast<double>(anchor.positives.size()) /
             static_cast<double>(anchor.negatives.size());
  return pr;
}

Posteriors posteriors(double phi_n_value, const PriorRatio& theta) {
  // q = phi_n * theta is the negative-to-positive posterior odds; both
  // posteriors are written in terms of q so the pair sums to one even when
  // q is extreme.
  const double q = phi_n_value * theta.theta;
  Posteriors post;
  post.p_neg = 1.0 / (1.0 + q);
  post.p_pos = 1.0 / (1.0 + 1.0 / q);
  return post;
}

double arithmetic_mean(const std::vector<double>& values) {
  if (values.empty()) {
    throw LengthMismatch("mean of an empty sample is undefined");
  }
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double harmonic_mean(const std::vector<double>& values) {
  if (values.empty()) {
    throw LengthMismatch("mean of an empty sample is undefined");
  }
  double s = 0.0;
  for (double v : values) s += 1.0 / v;
  return static_cast<double>(values.size()) / s;
}

}  // namespace cbml
