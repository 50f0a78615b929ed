#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cbml/bayes.hpp"
#include "cbml/geometry.hpp"
#include "cbml/matrix.hpp"
#include "cbml/pairs.hpp"

namespace cbml {

/// Outer averaging transform applied to the per-anchor aggregate S.
/// All three satisfy g(0) = 0, so anchors with empty hard sets drop out.
enum class AveragingVariant { log, constant, sqrt };

/// How the per-anchor scale factors on the positive/negative sums are chosen:
/// fixed config constants, or recomputed per anchor from the pair-set sizes
/// as |N_i|/|P_i|^2 and |P_i|/|N_i|^2.
enum class DeltaMode { constant_one, batch_ratio };

struct LossConfig {
  double alpha_pos = 0.5;
  double beta_pos = 0.5;
  double alpha_neg = 1.0;
  double beta_neg = 0.01;
  double delta_pos = 1.0;
  double delta_neg = 1.0;
  double lambda = 1.0;
  double gamma = 0.2;
  double epsilon = 0.1;
  AveragingVariant variant = AveragingVariant::log;
  DeltaMode delta_mode = DeltaMode::constant_one;
};

/// Throws ConfigError when a field is outside its documented domain.
void validate(const LossConfig& cfg);

struct LossReport {
  double total = 0.0;
  double pos_term = 0.0;
  double neg_term = 0.0;
  double mvc_term = 0.0;
  Matrix grad;             // d(total)/d(raw embeddings), one row per anchor
  std::vector<double> xi;  // per-anchor variance target, NaN when undefined
};

/// Per-anchor variance target: gamma * mean positive sim + (1-gamma) * mean
/// negative sim. Anchors missing either side get NaN and are skipped by the
/// variance penalty.
std::vector<double> target_values(const SimilarityMatrix& sims,
                                  const PairIndex& pairs, double gamma);

/// Mean over valid anchors of the mean squared deviation of the anchor's
/// negative similarities from its target. Zero when no anchor is valid.
double mvc_loss(const SimilarityMatrix& sims, const PairIndex& pairs,
                const std::vector<double>& xi);

/// The two averaged contrastive terms over mined hard sets. Computed in
/// log-sum-exp form so small beta values cannot overflow the exponentials.
std::pair<double, double> contrastive_bayes_term(const SimilarityMatrix& sims,
                                                 const PairIndex& hard_pairs,
                                                 const LossConfig& cfg);

/// Everything the loss computes from raw (pre-normalization) embeddings:
/// mining, targets, the three terms, and the exact analytical gradient with
/// hard-set membership and targets held constant.
LossReport cbml_loss_and_grad(const Matrix& raw, const std::vector<int>& labels,
                              const LossConfig& cfg);

/// The discrete decisions the loss makes for one batch. Freezing them lets
/// finite differences probe the same smooth function the analytical gradient
/// differentiates.
struct LossStructure {
  PairIndex mined;
  std::vector<double> xi;
};

LossStructure capture_structure(const Matrix& raw, const std::vector<int>& labels,
                                const LossConfig& cfg);

/// Total loss at `raw` with mining and targets taken from `structure` instead
/// of being recomputed.
double loss_with_structure(const Matrix& raw, const LossStructure& structure,
                           const LossConfig& cfg);

/// Data-driven starting point for the four exponential-envelope parameters,
/// derived from a Gaussian fit of the two similarity distributions.
struct SuggestedParameters {
  double alpha_pos = 0.0;
  double beta_pos = 0.0;
  double alpha_neg = 0.0;
  double beta_neg = 0.0;
};

SuggestedParameters suggest_parameters(const GaussianFit& fit, double delta_pos,
                                       double delta_neg);

const char* variant_name(AveragingVariant v);
AveragingVariant variant_from_name(const std::string& name);
const char* delta_mode_name(DeltaMode m);
DeltaMode delta_mode_from_name(const std::string& name);

}  // namespace cbml
