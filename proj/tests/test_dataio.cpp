#include <cmath>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "cbml/config.hpp"
#include "cbml/dataio.hpp"
#include "cbml/errors.hpp"
#include "doctest.h"

using cbml::FeatureDataset;
using cbml::Matrix;

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("a dataset survives the save and load round trip unchanged") {
  FeatureDataset original = cbml::synth_blobs(3, 5, 4, 2.5, 0.7, 321);
  cbml::save_csv("tmp_roundtrip.csv", original);
  FeatureDataset loaded = cbml::load_csv("tmp_roundtrip.csv");
  CHECK(loaded.labels == original.labels);
  REQUIRE(loaded.features.data.size() == original.features.data.size());
  for (std::size_t i = 0; i < loaded.features.data.size(); ++i) {
    // 17 significant digits reproduce the double exactly
    CHECK(loaded.features.data[i] == original.features.data[i]);
  }
}

TEST_CASE("a small well-formed file parses with its shape intact") {
  write_file("tmp_small.csv", "label,f0,f1\n0,1.5,-2.25\n1,0.125,3\n");
  FeatureDataset ds = cbml::load_csv("tmp_small.csv");
  CHECK(ds.size() == 2);
  CHECK(ds.dim() == 2);
  CHECK(ds.labels == std::vector<int>{0, 1});
  CHECK(ds.features(0, 1) == doctest::Approx(-2.25));
  CHECK(ds.features(1, 0) == doctest::Approx(0.125));
}

TEST_CASE("carriage returns and blank lines are tolerated") {
  write_file("tmp_crlf.csv", "label,f0\r\n0,1.0\r\n\r\n1,2.0\r\n");
  FeatureDataset ds = cbml::load_csv("tmp_crlf.csv");
  CHECK(ds.size() == 2);
  CHECK(ds.features(1, 0) == doctest::Approx(2.0));
}

TEST_CASE("malformed rows are rejected with their line number") {
  write_file("tmp_short_row.csv", "label,f0,f1\n0,1.0\n");
  CHECK_THROWS_AS(cbml::load_csv("tmp_short_row.csv"), cbml::DimMismatch);

  write_file("tmp_bad_label.csv", "label,f0\n0,1.0\nx,2.0\n");
  try {
    cbml::load_csv("tmp_bad_label.csv");
    FAIL("expected a parse error");
  } catch (const cbml::ParseError& e) {
    CHECK(e.line_number == 3);
  }

  write_file("tmp_bad_value.csv", "label,f0\n0,oops\n");
  CHECK_THROWS_AS(cbml::load_csv("tmp_bad_value.csv"), cbml::ParseError);

  write_file("tmp_bad_header.csv", "id,f0\n0,1.0\n");
  CHECK_THROWS_AS(cbml::load_csv("tmp_bad_header.csv"), cbml::ParseError);

  write_file("tmp_empty.csv", "");
  CHECK_THROWS_AS(cbml::load_csv("tmp_empty.csv"), cbml::ParseError);
}

TEST_CASE("synthetic blobs are reproducible and spread as configured") {
  FeatureDataset a = cbml::synth_blobs(4, 6, 5, 3.0, 0.2, 42);
  FeatureDataset b = cbml::synth_blobs(4, 6, 5, 3.0, 0.2, 42);
  CHECK(a.features.data == b.features.data);
  CHECK(a.labels == b.labels);

  FeatureDataset c = cbml::synth_blobs(4, 6, 5, 3.0, 0.2, 43);
  CHECK(a.features.data != c.features.data);

  // zero noise collapses every class onto its center
  FeatureDataset tight = cbml::synth_blobs(3, 4, 4, 2.0, 0.0, 7);
  for (const auto& [cls, rows] : tight.class_index) {
    (void)cls;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      for (std::size_t j = 0; j < tight.dim(); ++j) {
        CHECK(tight.features(static_cast<std::size_t>(rows[r]), j) ==
              tight.features(static_cast<std::size_t>(rows[0]), j));
      }
    }
  }

  CHECK_THROWS_AS(cbml::synth_blobs(1, 4, 3, 1.0, 0.1, 0), cbml::ConfigError);
  CHECK_THROWS_AS(cbml::synth_blobs(3, 1, 3, 1.0, 0.1, 0), cbml::ConfigError);
}

TEST_CASE("wide centers and small noise classify perfectly by nearest center") {
  FeatureDataset ds = cbml::synth_blobs(4, 12, 6, 10.0, 0.1, 55);
  Matrix means(4, 6);
  std::vector<int> counts(4, 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int c = ds.labels[i];
    counts[static_cast<std::size_t>(c)] += 1;
    for (std::size_t j = 0; j < 6; ++j) {
      means(static_cast<std::size_t>(c), j) += ds.features(i, j);
    }
  }
  for (int c = 0; c < 4; ++c) {
    for (std::size_t j = 0; j < 6; ++j) {
      means(static_cast<std::size_t>(c), j) /= counts[static_cast<std::size_t>(c)];
    }
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    int best = -1;
    double best_d = 0.0;
    for (int c = 0; c < 4; ++c) {
      double dist = 0.0;
      for (std::size_t j = 0; j < 6; ++j) {
        const double diff = ds.features(i, j) - means(static_cast<std::size_t>(c), j);
        dist += diff * diff;
      }
      if (best < 0 || dist < best_d) {
        best = c;
        best_d = dist;
      }
    }
    CHECK(best == ds.labels[i]);
  }
}

TEST_CASE("fractional splits send the leading classes to the train side") {
  FeatureDataset ds = cbml::synth_blobs(4, 3, 3, 2.0, 0.1, 9);
  auto [train, test] = cbml::split_by_class(ds, 0.5);
  std::set<int> train_classes(train.labels.begin(), train.labels.end());
  std::set<int> test_classes(test.labels.begin(), test.labels.end());
  CHECK(train_classes == std::set<int>{0, 1});
  CHECK(test_classes == std::set<int>{2, 3});
  CHECK(train.size() + test.size() == ds.size());

  CHECK_THROWS_AS(cbml::split_by_class(ds, 0.0), cbml::InvalidSplit);
  CHECK_THROWS_AS(cbml::split_by_class(ds, 1.0), cbml::InvalidSplit);
}

TEST_CASE("explicit split specs are validated then honored") {
  FeatureDataset ds = cbml::synth_blobs(3, 4, 3, 2.0, 0.1, 10);
  cbml::SplitSpec spec;
  spec.train_classes = {0, 2};
  spec.test_classes = {1};
  auto [train, test] = cbml::split_by_class(ds, spec);
  CHECK(train.size() == 8);
  CHECK(test.size() == 4);
  for (int l : test.labels) CHECK(l == 1);

  cbml::SplitSpec overlap;
  overlap.train_classes = {0, 1};
  overlap.test_classes = {1, 2};
  CHECK_THROWS_AS(cbml::split_by_class(ds, overlap), cbml::InvalidSplit);

  cbml::SplitSpec unknown;
  unknown.train_classes = {0};
  unknown.test_classes = {9};
  CHECK_THROWS_AS(cbml::split_by_class(ds, unknown), cbml::InvalidSplit);

  cbml::SplitSpec hollow;
  hollow.train_classes = {0, 1, 2};
  CHECK_THROWS_AS(cbml::split_by_class(ds, hollow), cbml::EmptySide);
}

TEST_CASE("config text accepts comments and rejects junk") {
  cbml::RunConfig cfg = cbml::parse_config_text(
      "# experiment settings\n"
      "lambda = 0.5   # tuned down\n"
      "variant = sqrt\n"
      "steps = 250\n"
      "encoder = mlp2\n"
      "seed = 777\n");
  CHECK(cfg.train.loss.lambda == doctest::Approx(0.5));
  CHECK(cfg.train.loss.variant == cbml::AveragingVariant::sqrt);
  CHECK(cfg.train.steps == 250);
  CHECK(cfg.encoder == cbml::EncoderKind::mlp2);
  CHECK(cfg.train.seed == 777);
  CHECK(cfg.seed_from_file);

  cbml::RunConfig plain = cbml::parse_config_text("lambda = 2.0\n");
  CHECK_FALSE(plain.seed_from_file);

  CHECK_THROWS_AS(cbml::parse_config_text("warp_factor = 9\n"), cbml::ConfigError);
  CHECK_THROWS_AS(cbml::parse_config_text("lambda = 1\nlambda = 2\n"), cbml::ParseError);
  CHECK_THROWS_AS(cbml::parse_config_text("lambda\n"), cbml::ParseError);
  CHECK_THROWS_AS(cbml::parse_config_text("lambda = abc\n"), cbml::ParseError);
  CHECK_THROWS_AS(cbml::parse_config_text("beta_pos = -1\n"), cbml::ConfigError);
  CHECK_THROWS_AS(cbml::parse_config_text("hidden_dim = 0\n"), cbml::ConfigError);
}

TEST_CASE("config serialization round-trips every field") {
  cbml::RunConfig cfg;
  cfg.train.loss.lambda = 0.125;
  cfg.train.loss.gamma = 0.375;
  cfg.train.loss.variant = cbml::AveragingVariant::constant;
  cfg.train.loss.delta_mode = cbml::DeltaMode::batch_ratio;
  cfg.train.batch_classes = 5;
  cfg.train.adam.learning_rate = 0.0025;
  cfg.train.seed = 31337;
  cfg.encoder = cbml::EncoderKind::mlp2;
  cfg.hidden_dim = 48;
  cfg.embedding_dim = 12;

  cbml::RunConfig back = cbml::parse_config_text(cbml::config_to_text(cfg));
  CHECK(back.train.loss.lambda == cfg.train.loss.lambda);
  CHECK(back.train.loss.gamma == cfg.train.loss.gamma);
  CHECK(back.train.loss.variant == cfg.train.loss.variant);
  CHECK(back.train.loss.delta_mode == cfg.train.loss.delta_mode);
  CHECK(back.train.batch_classes == cfg.train.batch_classes);
  CHECK(back.train.adam.learning_rate == cfg.train.adam.learning_rate);
  CHECK(back.train.seed == cfg.train.seed);
  CHECK(back.encoder == cfg.encoder);
  CHECK(back.hidden_dim == cfg.hidden_dim);
  CHECK(back.embedding_dim == cfg.embedding_dim);
}
