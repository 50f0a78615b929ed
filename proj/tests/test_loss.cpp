#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "cbml/errors.hpp"
#include "cbml/gradcheck.hpp"
#include "cbml/loss.hpp"
#include "cbml/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"

using cbml::LossConfig;
using cbml::LossReport;
using cbml::Matrix;
using cbml::PairIndex;
using cbml::SimilarityMatrix;

namespace {

SimilarityMatrix three_point_sims(double s01, double s02, double s12) {
  Matrix m(3, 3);
  for (std::size_t i = 0; i < 3; ++i) m(i, i) = 1.0;
  m(0, 1) = m(1, 0) = s01;
  m(0, 2) = m(2, 0) = s02;
  m(1, 2) = m(2, 1) = s12;
  return SimilarityMatrix{m};
}

const std::vector<cbml::AveragingVariant> kVariants = {
    cbml::AveragingVariant::log, cbml::AveragingVariant::constant,
    cbml::AveragingVariant::sqrt};

}  // namespace

TEST_CASE("target value mixes the two side means") {
  SimilarityMatrix s = three_point_sims(0.8, 0.2, 0.1);
  PairIndex p = cbml::partition_pairs({0, 0, 1});
  // anchor 0 sees one positive at 0.8 and one negative at 0.2
  CHECK(cbml::target_values(s, p, 0.2)[0] == doctest::Approx(0.32).epsilon(1e-12));
  CHECK(cbml::target_values(s, p, 0.0)[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(cbml::target_values(s, p, 1.0)[0] == doctest::Approx(0.8).epsilon(1e-12));
  // anchor 2 has no positives, so its target is undefined
  CHECK(std::isnan(cbml::target_values(s, p, 0.2)[2]));
}

TEST_CASE("variance penalty matches the closed form on two negatives") {
  Matrix m(4, 4);
  for (std::size_t i = 0; i < 4; ++i) m(i, i) = 1.0;
  auto set = [&m](std::size_t i, std::size_t j, double v) { m(i, j) = m(j, i) = v; };
  set(0, 1, 0.9);
  set(0, 2, 0.3);
  set(0, 3, 0.1);
  set(1, 2, 0.2);
  set(1, 3, 0.2);
  set(2, 3, 0.5);
  PairIndex p = cbml::partition_pairs({0, 0, 1, 1});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> xi = {0.2, nan, nan, nan};
  CHECK(cbml::mvc_loss(SimilarityMatrix{m}, p, xi) == doctest::Approx(0.01).epsilon(1e-12));

  // negatives exactly at the target leave nothing to penalize
  std::vector<double> exact = {nan, 0.2, nan, nan};
  CHECK(cbml::mvc_loss(SimilarityMatrix{m}, p, exact) == doctest::Approx(0.0).epsilon(1e-15));

  std::vector<double> none(4, nan);
  CHECK(cbml::mvc_loss(SimilarityMatrix{m}, p, none) == 0.0);
}

TEST_CASE("a positive sitting exactly at alpha contributes log 2") {
  Matrix m(2, 2);
  m(0, 0) = m(1, 1) = 1.0;
  m(0, 1) = m(1, 0) = 0.5;  // equals the default alpha_pos
  PairIndex hard;
  hard.anchors.resize(2);
  hard.anchors[0].positives = {1};
  hard.anchors[0].negatives = {1};  // sizes only matter for batch_ratio mode
  hard.anchors[0].hard_positives = {1};
  hard.anchors[1].positives = {0};
  hard.anchors[1].negatives = {0};
  hard.anchors[1].hard_positives = {0};
  LossConfig cfg;
  auto [pos, neg] = cbml::contrastive_bayes_term(SimilarityMatrix{m}, hard, cfg);
  CHECK(pos == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(neg == 0.0);
}

TEST_CASE("empty hard sets cost nothing under every variant") {
  Matrix m(2, 2);
  m(0, 0) = m(1, 1) = 1.0;
  m(0, 1) = m(1, 0) = 0.3;
  PairIndex hard;
  hard.anchors.resize(2);
  LossConfig cfg;
  for (auto v : kVariants) {
    cfg.variant = v;
    auto [pos, neg] = cbml::contrastive_bayes_term(SimilarityMatrix{m}, hard, cfg);
    CHECK(pos == 0.0);
    CHECK(neg == 0.0);
  }
}

TEST_CASE("config validation rejects out-of-domain fields") {
  LossConfig cfg;
  cfg.beta_pos = 0.0;
  CHECK_THROWS_AS(cbml::validate(cfg), cbml::ConfigError);
  cfg = LossConfig{};
  cfg.gamma = 1.5;
  CHECK_THROWS_AS(cbml::validate(cfg), cbml::ConfigError);
  cfg = LossConfig{};
  cfg.lambda = -0.1;
  CHECK_THROWS_AS(cbml::validate(cfg), cbml::ConfigError);
  cfg = LossConfig{};
  cfg.epsilon = -1.0;
  CHECK_THROWS_AS(cbml::validate(cfg), cbml::ConfigError);
}

TEST_CASE("loss components match the naive double-loop evaluation") {
  cbml::Rng rng(101);
  for (int trial = 0; trial < 60; ++trial) {
    auto batch = testutil::random_batch(rng, 8 + 2 * (trial % 5), 6, 2 + trial % 3);
    LossConfig cfg;
    cfg.variant = kVariants[static_cast<std::size_t>(trial) % kVariants.size()];
    cfg.delta_mode = (trial % 2 == 0) ? cbml::DeltaMode::constant_one
                                      : cbml::DeltaMode::batch_ratio;
    cfg.lambda = (trial % 4 == 0) ? 0.0 : 1.0;
    cfg.epsilon = 0.05 + 0.3 * rng.uniform();
    cfg.gamma = rng.uniform();
    LossReport report = cbml::cbml_loss_and_grad(batch.raw, batch.labels, cfg);
    oracle::LossParts parts = oracle::cbml_loss(batch.raw, batch.labels, cfg);
    CHECK(report.pos_term == doctest::Approx(parts.pos).epsilon(1e-10));
    CHECK(report.neg_term == doctest::Approx(parts.neg).epsilon(1e-10));
    CHECK(report.mvc_term == doctest::Approx(parts.mvc).epsilon(1e-10));
    CHECK(report.total == doctest::Approx(parts.total).epsilon(1e-10));
  }
}

TEST_CASE("report total decomposes into its terms") {
  cbml::Rng rng(55);
  auto batch = testutil::random_batch(rng, 12, 5, 3);
  LossConfig cfg;
  cfg.lambda = 0.7;
  LossReport r = cbml::cbml_loss_and_grad(batch.raw, batch.labels, cfg);
  CHECK(r.total ==
        doctest::Approx(r.pos_term + r.neg_term + cfg.lambda * r.mvc_term).epsilon(1e-10));
  CHECK(r.pos_term >= 0.0);
  CHECK(r.neg_term >= 0.0);
  CHECK(std::isfinite(r.mvc_term));

  cfg.lambda = 0.0;
  LossReport flat = cbml::cbml_loss_and_grad(batch.raw, batch.labels, cfg);
  CHECK(flat.total == flat.pos_term + flat.neg_term);
}

TEST_CASE("analytical gradient agrees with central differences") {
  cbml::Rng rng(77);
  auto batch = testutil::random_batch(rng, 16, 8, 4);
  LossConfig cfg;
  CHECK(cbml::max_gradient_error(batch.raw, batch.labels, cfg, 1e-5) < 1e-4);
}

TEST_CASE("raising a hard positive similarity lowers the positive term") {
  Matrix m(2, 2);
  m(0, 0) = m(1, 1) = 1.0;
  m(0, 1) = m(1, 0) = 0.4;
  PairIndex hard;
  hard.anchors.resize(2);
  hard.anchors[0].positives = {1};
  hard.anchors[0].negatives = {1};
  hard.anchors[0].hard_positives = {1};
  LossConfig cfg;
  auto [before, nb] = cbml::contrastive_bayes_term(SimilarityMatrix{m}, hard, cfg);
  m(0, 1) = m(1, 0) = 0.45;
  auto [after, na] = cbml::contrastive_bayes_term(SimilarityMatrix{m}, hard, cfg);
  CHECK(after < before);
  CHECK(nb == na);
}

TEST_CASE("raising a hard negative similarity raises the negative term") {
  Matrix m(2, 2);
  m(0, 0) = m(1, 1) = 1.0;
  m(0, 1) = m(1, 0) = 0.6;
  PairIndex hard;
  hard.anchors.resize(2);
  hard.anchors[0].positives = {1};
  hard.anchors[0].negatives = {1};
  hard.anchors[0].hard_negatives = {1};
  LossConfig cfg;
  auto [pb, before] = cbml::contrastive_bayes_term(SimilarityMatrix{m}, hard, cfg);
  m(0, 1) = m(1, 0) = 0.65;
  auto [pa, after] = cbml::contrastive_bayes_term(SimilarityMatrix{m}, hard, cfg);
  CHECK(after > before);
  CHECK(pb == pa);
}

TEST_CASE("loss is invariant under a joint row and label permutation") {
  cbml::Rng rng(88);
  auto batch = testutil::random_batch(rng, 14, 6, 3);
  LossConfig cfg;
  LossReport base = cbml::cbml_loss_and_grad(batch.raw, batch.labels, cfg);

  std::vector<int> perm(14);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  Matrix shuffled = cbml::take_rows(batch.raw, perm);
  std::vector<int> shuffled_labels(14);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    shuffled_labels[i] = batch.labels[static_cast<std::size_t>(perm[i])];
  }
  LossReport moved = cbml::cbml_loss_and_grad(shuffled, shuffled_labels, cfg);
  CHECK(moved.total == doctest::Approx(base.total).epsilon(1e-12));
  CHECK(moved.pos_term == doctest::Approx(base.pos_term).epsilon(1e-12));
  CHECK(moved.neg_term == doctest::Approx(base.neg_term).epsilon(1e-12));
}

TEST_CASE("tiny beta stays finite under the log variant") {
  cbml::Rng rng(91);
  auto batch = testutil::random_batch(rng, 10, 4, 2);
  LossConfig cfg;
  cfg.beta_neg = 1e-4;
  cfg.beta_pos = 1e-4;
  LossReport r = cbml::cbml_loss_and_grad(batch.raw, batch.labels, cfg);
  CHECK(std::isfinite(r.total));
  CHECK(cbml::all_finite(r.grad));
}

TEST_CASE("frozen-structure loss matches the live loss at the capture point") {
  cbml::Rng rng(93);
  auto batch = testutil::random_batch(rng, 12, 5, 3);
  LossConfig cfg;
  LossReport live = cbml::cbml_loss_and_grad(batch.raw, batch.labels, cfg);
  cbml::LossStructure st = cbml::capture_structure(batch.raw, batch.labels, cfg);
  CHECK(cbml::loss_with_structure(batch.raw, st, cfg) ==
        doctest::Approx(live.total).epsilon(1e-12));
}

TEST_CASE("parameter suggestion centers the envelopes between the means") {
  cbml::GaussianFit fit{0.8, 0.2, 0.2, 0.2};
  cbml::SuggestedParameters sp = cbml::suggest_parameters(fit, 1.0, 1.0);
  CHECK(sp.alpha_pos == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sp.alpha_neg == doctest::Approx(0.5).epsilon(1e-12));
  // equal spreads and unit deltas make the two slopes symmetric
  CHECK(sp.beta_pos == doctest::Approx(sp.beta_neg).epsilon(1e-12));
  CHECK(sp.beta_pos == doctest::Approx(0.5 / 7.5).epsilon(1e-12));

  cbml::GaussianFit flat{0.5, 0.2, 0.5, 0.2};
  CHECK_THROWS_AS(cbml::suggest_parameters(flat, 1.0, 1.0), cbml::DegenerateFit);
}

TEST_CASE("variant and delta-mode names round-trip") {
  for (auto v : kVariants) {
    CHECK(cbml::variant_from_name(cbml::variant_name(v)) == v);
  }
  CHECK(cbml::delta_mode_from_name("batch_ratio") == cbml::DeltaMode::batch_ratio);
  CHECK_THROWS_AS(cbml::variant_from_name("cubic"), cbml::ConfigError);
  CHECK_THROWS_AS(cbml::delta_mode_from_name("auto"), cbml::ConfigError);
}
