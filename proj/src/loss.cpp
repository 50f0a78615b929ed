#include "cbml/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cbml/errors.hpp"

namespace cbml {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double softplus(double x) {
  // log(1 + e^x) without overflow on either tail.
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

/// One anchor-side aggregate: value g(S) and d g / d t_j for each selected
/// pair, where S = delta * sum_j exp(t_j). Everything runs on log(S) so the
/// individual exponentials never overflow.
struct SideEval {
  double value = 0.0;
  std::vector<double> dg_dt;
};

SideEval eval_side(const std::vector<double>& ts, double log_delta,
                   AveragingVariant variant) {
  SideEval out;
  if (ts.empty()) return out;
  double t_max = ts[0];
  for (double t : ts) t_max = std::max(t_max, t);
  double sum = 0.0;
  for (double t : ts) sum += std::exp(t - t_max);
  const double log_s = log_delta + t_max + std::log(sum);

  out.dg_dt.resize(ts.size());
  switch (variant) {
    case AveragingVariant::log: {
      // g = log(1 + S); dg/dt_j = delta e^{t_j} / (1 + S) = e^{log_delta + t_j - g}.
      const double g = softplus(log_s);
      out.value = g;
      for (std::size_t j = 0; j < ts.size(); ++j) {
        out.dg_dt[j] = std::exp(log_delta + ts[j] - g);
      }
      break;
    }
    case AveragingVariant::constant: {
      // g = S. Genuinely huge sums overflow to inf here and surface as
      // NonFiniteLoss; that is a config problem, not a rounding one.
      out.value = std::exp(log_s);
      for (std::size_t j = 0; j < ts.size(); ++j) {
        out.dg_dt[j] = std::exp(log_delta + ts[j]);
      }
      break;
    }
    case AveragingVariant::sqrt: {
      // g = sqrt(1 + S) - 1 = expm1(h / 2) with h = log(1 + S);
      // dg/dt_j = delta e^{t_j} / (2 sqrt(1 + S)).
      const double h = softplus(log_s);
      out.value = std::expm1(0.5 * h);
      for (std::size_t j = 0; j < ts.size(); ++j) {
        out.dg_dt[j] = 0.5 * std::exp(log_delta + ts[j] - 0.5 * h);
      }
      break;
    }
  }
  return out;
}

double log_delta_pos(const AnchorPairs& a, const LossConfig& cfg) {
  if (cfg.delta_mode == DeltaMode::constant_one) return std::log(cfg.delta_pos);
  // |N_i| / |P_i|^2 from the full (unmined) sets.
  const double np = static_cast<double>(a.positives.size());
  const double nn = static_cast<double>(a.negatives.size());
  return std::log(nn) - 2.0 * std::log(np);
}

double log_delta_neg(const AnchorPairs& a, const LossConfig& cfg) {
  if (cfg.delta_mode == DeltaMode::constant_one) return std::log(cfg.delta_neg);
  const double np = static_cast<double>(a.positives.size());
  const double nn = static_cast<double>(a.negatives.size());
  return std::log(np) - 2.0 * std::log(nn);
}

struct AnchorTerms {
  SideEval pos;
  SideEval neg;
};

AnchorTerms eval_anchor(const SimilarityMatrix& sims, const AnchorPairs& a,
                        std::size_t i, const LossConfig& cfg) {
  AnchorTerms terms;
  std::vector<double> ts;
  if (!a.hard_positives.empty()) {
    ts.reserve(a.hard_positives.size());
    for (int j : a.hard_positives) {
      ts.push_back((cfg.alpha_pos - sims(i, static_cast<std::size_t>(j))) / cfg.beta_pos);
    }
    terms.pos = eval_side(ts, log_delta_pos(a, cfg), cfg.variant);
  }
  if (!a.hard_negatives.empty()) {
    ts.clear();
    ts.reserve(a.hard_negatives.size());
    for (int j : a.hard_negatives) {
      ts.push_back((sims(i, static_cast<std::size_t>(j)) - cfg.alpha_neg) / cfg.beta_neg);
    }
    terms.neg = eval_side(ts, log_delta_neg(a, cfg), cfg.variant);
  }
  return terms;
}

std::size_t count_valid(const std::vector<double>& xi) {
  std::size_t n = 0;
  for (double v : xi) {
    if (std::isfinite(v)) ++n;
  }
  return n;
}

}  // namespace

void validate(const LossConfig& cfg) {
  if (!(cfg.beta_pos > 0.0)) throw ConfigError("beta_pos must be > 0");
  if (!(cfg.beta_neg > 0.0)) throw ConfigError("beta_neg must be > 0");
  if (!(cfg.delta_pos > 0.0)) throw ConfigError("delta_pos must be > 0");
  if (!(cfg.delta_neg > 0.0)) throw ConfigError("delta_neg must be > 0");
  if (!(cfg.lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0)) throw ConfigError("gamma must be in [0,1]");
  if (!(cfg.epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
}

std::vector<double> target_values(const SimilarityMatrix& sims,
                                  const PairIndex& pairs, double gamma) {
  const std::size_t n = pairs.size();
  std::vector<double> xi(n, kNaN);
  for (std::size_t i = 0; i < n; ++i) {
    const AnchorPairs& a = pairs.anchors[i];
    if (a.positives.empty() || a.negatives.empty()) continue;
    double pos_mean = 0.0;
    for (int j : a.positives) pos_mean += sims(i, static_cast<std::size_t>(j));
    pos_mean /= static_cast<double>(a.positives.size());
    double neg_mean = 0.0;
    for (int j : a.negatives) neg_mean += sims(i, static_cast<std::size_t>(j));
    neg_mean /= static_cast<double>(a.negatives.size());
    xi[i] = gamma * pos_mean + (1.0 - gamma) * neg_mean;
  }
  return xi;
}

double mvc_loss(const SimilarityMatrix& sims, const PairIndex& pairs,
                const std::vector<double>& xi) {
  if (xi.size() != pairs.size()) {
    throw LengthMismatch("target values and pair index cover different batch sizes");
  }
  const std::size_t valid = count_valid(xi);
  if (valid == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!std::isfinite(xi[i])) continue;
    const AnchorPairs& a = pairs.anchors[i];
    double anchor_sum = 0.0;
    for (int j : a.negatives) {
      const double d = sims(i, static_cast<std::size_t>(j)) - xi[i];
      anchor_sum += d * d;
    }
    total += anchor_sum / static_cast<double>(a.negatives.size());
  }
  return total / static_cast<double>(valid);
}

std::pair<double, double> contrastive_bayes_term(const SimilarityMatrix& sims,
                                                 const PairIndex& hard_pairs,
                                                 const LossConfig& cfg) {
  validate(cfg);
  if (sims.size() != hard_pairs.size()) {
    throw DimMismatch("similarity matrix and pair index cover different batch sizes");
  }
  const std::size_t n = hard_pairs.size();
  double pos = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const AnchorTerms terms = eval_anchor(sims, hard_pairs.anchors[i], i, cfg);
    pos += terms.pos.value;
    neg += terms.neg.value;
  }
  return {pos / static_cast<double>(n), neg / static_cast<double>(n)};
}

LossStructure capture_structure(const Matrix& raw, const std::vector<int>& labels,
                                const LossConfig& cfg) {
  validate(cfg);
  EmbeddingBatch batch = make_embedding_batch(raw, labels);
  const SimilarityMatrix sims = similarity_matrix(batch);
  const PairIndex pairs = partition_pairs(labels);
  LossStructure st;
  st.mined = mine_hard_pairs(sims, pairs, cfg.epsilon);
  st.xi = target_values(sims, pairs, cfg.gamma);
  return st;
}

double loss_with_structure(const Matrix& raw, const LossStructure& structure,
                           const LossConfig& cfg) {
  EmbeddingBatch batch;
  batch.data = normalize_rows(raw);
  batch.labels.assign(raw.rows, 0);
  const SimilarityMatrix sims = similarity_matrix(batch);
  const auto [pos, neg] = contrastive_bayes_term(sims, structure.mined, cfg);
  const double mvc = mvc_loss(sims, structure.mined, structure.xi);
  const double total = pos + neg + cfg.lambda * mvc;
  if (!std::isfinite(total)) {
    throw NonFiniteLoss("loss is not finite; check beta/delta settings");
  }
  return total;
}

LossReport cbml_loss_and_grad(const Matrix& raw, const std::vector<int>& labels,
                              const LossConfig& cfg) {
  validate(cfg);
  EmbeddingBatch batch = make_embedding_batch(raw, labels);
  const SimilarityMatrix sims = similarity_matrix(batch);
  const PairIndex pairs = partition_pairs(labels);
  const PairIndex mined = mine_hard_pairs(sims, pairs, cfg.epsilon);
  const std::size_t n = batch.size();
  const std::size_t d = batch.dim();

  LossReport report;
  report.xi = target_values(sims, pairs, cfg.gamma);
  report.mvc_term = mvc_loss(sims, pairs, report.xi);

  // Accumulate d(total)/d(m_ij) over ordered anchor reads; the i<->j symmetry
  // of the similarity is restored below via G + G^T.
  Matrix g_sim(n, n);
  double pos = 0.0, neg = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const AnchorPairs& a = mined.anchors[i];
    const AnchorTerms terms = eval_anchor(sims, a, i, cfg);
    pos += terms.pos.value;
    neg += terms.neg.value;
    for (std::size_t idx = 0; idx < a.hard_positives.size(); ++idx) {
      const auto j = static_cast<std::size_t>(a.hard_positives[idx]);
      g_sim(i, j) += inv_n * terms.pos.dg_dt[idx] * (-1.0 / cfg.beta_pos);
    }
    for (std::size_t idx = 0; idx < a.hard_negatives.size(); ++idx) {
      const auto j = static_cast<std::size_t>(a.hard_negatives[idx]);
      g_sim(i, j) += inv_n * terms.neg.dg_dt[idx] * (1.0 / cfg.beta_neg);
    }
  }
  report.pos_term = pos * inv_n;
  report.neg_term = neg * inv_n;

  if (cfg.lambda > 0.0) {
    const std::size_t valid = count_valid(report.xi);
    if (valid > 0) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(report.xi[i])) continue;
        const AnchorPairs& a = pairs.anchors[i];
        const double scale =
            cfg.lambda * 2.0 /
            (static_cast<double>(valid) * static_cast<double>(a.negatives.size()));
        for (int j : a.negatives) {
          const auto js = static_cast<std::size_t>(j);
          g_sim(i, js) += scale * (sims(i, js) - report.xi[i]);
        }
      }
    }
  }

  report.total = report.pos_term + report.neg_term + cfg.lambda * report.mvc_term;
  if (!std::isfinite(report.pos_term) || !std::isfinite(report.neg_term) ||
      !std::isfinite(report.mvc_term) || !std::isfinite(report.total)) {
    throw NonFiniteLoss("loss is not finite; check beta/delta settings");
  }

  // d(total)/d(x_i) = sum_j (G_ij + G_ji) x_j for unit embeddings x, then
  // back through the normalization x = v / |v|.
  Matrix grad_unit(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    double* gi = grad_unit.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double w = g_sim(i, j) + g_sim(j, i);
      if (w == 0.0) continue;
      const double* xj = batch.data.row(j);
      for (std::size_t c = 0; c < d; ++c) gi[c] += w * xj[c];
    }
  }
  report.grad = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const double* v = raw.row(i);
    const double* x = batch.data.row(i);
    const double* u = grad_unit.row(i);
    const double norm = std::sqrt(dot(v, v, d));
    const double radial = dot(u, x, d);
    double* g = report.grad.row(i);
    for (std::size_t c = 0; c < d; ++c) {
      g[c] = (u[c] - radial * x[c]) / norm;
    }
  }
  if (!all_finite(report.grad)) {
    throw NonFiniteGradient("loss gradient is not finite");
  }
  return report;
}

SuggestedParameters suggest_parameters(const GaussianFit& fit, double delta_pos,
                                       double delta_neg) {
  if (fit.mu_pos == fit.mu_neg) {
    throw DegenerateFit("equal similarity means leave the envelope slopes undefined");
  }
  const double alpha = 0.5 * (fit.mu_pos + fit.mu_neg);
  const double mean_gap = fit.mu_pos * fit.mu_pos - fit.mu_neg * fit.mu_neg;
  const double ratio_pos =
      mean_gap / (2.0 * fit.sigma_pos * fit.sigma_pos) + std::log(delta_pos);
  const double ratio_neg =
      mean_gap / (2.0 * fit.sigma_neg * fit.sigma_neg) - std::log(delta_neg);
  if (!(ratio_pos > 0.0) || !(ratio_neg > 0.0)) {
    throw DegenerateFit("envelope slope came out non-positive for this fit");
  }
  SuggestedParameters out;
  out.alpha_pos = alpha;
  out.alpha_neg = alpha;
  out.beta_pos = alpha / ratio_pos;
  out.beta_neg = alpha / ratio_neg;
  if (!(out.beta_pos > 0.0) || !(out.beta_neg > 0.0)) {
    throw DegenerateFit("suggested beta is non-positive; fit means straddle zero");
  }
  return out;
}

const char* variant_name(AveragingVariant v) {
  switch (v) {
    case AveragingVariant::log: return "log";
    case AveragingVariant::constant: return "const";
    case AveragingVariant::sqrt: return "sqrt";
  }
  return "log";
}

AveragingVariant variant_from_name(const std::string& name) {
  if (name == "log") return AveragingVariant::log;
  if (name == "const") return AveragingVariant::constant;
  if (name == "sqrt") return AveragingVariant::sqrt;
  throw ConfigError("unknown averaging variant: " + name);
}

const char* delta_mode_name(DeltaMode m) {
  return m == DeltaMode::constant_one ? "constant_one" : "batch_ratio";
}

DeltaMode delta_mode_from_name(const std::string& name) {
  if (name == "constant_one") return DeltaMode::constant_one;
  if (name == "batch_ratio") return DeltaMode::batch_ratio;
  throw ConfigError("unknown delta mode: " + name);
}

}  // namespace cbml
