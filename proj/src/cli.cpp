#include "cbml/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <tuple>

#include "CLI11.hpp"
#include "json.hpp"

#include "cbml/config.hpp"
#include "cbml/dataio.hpp"
#include "cbml/errors.hpp"
#include "cbml/eval.hpp"
#include "cbml/gradcheck.hpp"
#include "cbml/model_io.hpp"
#include "cbml/pseudo.hpp"
#include "cbml/trainer.hpp"
#include "cbml/version.hpp"

namespace cbml {

namespace {

using nlohmann::json;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Deterministic child stream. Every independent consumer of randomness gets
/// its own tag so adding one never shifts another's draws.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return seed * 0x9e3779b97f4a7c15ULL + tag;
}

constexpr std::uint64_t kEncoderInitTag = 1;
constexpr std::uint64_t kReportClusteringTag = 7;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag,
                           const RunConfig* cfg) {
  if (flag.has_value()) return *flag;
  if (cfg != nullptr && cfg->seed_from_file) return cfg->train.seed;
  if (const char* env = std::getenv("CBML_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError("CBML_SEED must be an unsigned integer");
    }
  }
  return 0;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ParseError(0, "cannot open " + tmp + " for writing");
    out << content;
    if (!out) throw ParseError(0, "write to " + tmp + " failed");
  }
  std::filesystem::rename(tmp, path);
}

/// One manifest per run, named after the primary output. Timestamps make it
/// non-reproducible by design; every other written file is byte-stable.
struct ManifestBuilder {
  json doc;

  ManifestBuilder(const std::string& subcommand, std::uint64_t seed) {
    doc["subcommand"] = subcommand;
    doc["version"] = kVersion;
    doc["seed"] = seed;
    doc["started_utc"] = utc_now();
    doc["inputs"] = json::object();
    doc["outputs"] = json::object();
  }

  void input(const std::string& name, const std::string& path) {
    if (!path.empty()) doc["inputs"][name] = path;
  }
  void output(const std::string& name, const std::string& path) {
    if (!path.empty()) doc["outputs"][name] = path;
  }
  void config_text(const std::string& text) { doc["resolved_config"] = text; }

  void write(const std::string& primary_output) {
    doc["finished_utc"] = utc_now();
    write_text_atomic(primary_output + ".manifest.json", doc.dump(2) + "\n");
  }
};

std::vector<int> parse_ks(const std::string& text) {
  std::vector<int> ks;
  std::string current;
  for (char c : text + ",") {
    if (c == ',') {
      if (current.empty()) continue;
      try {
        ks.push_back(std::stoi(current));
      } catch (const std::exception&) {
        throw ConfigError("bad K value '" + current + "' in --ks");
      }
      current.clear();
    } else {
      current += c;
    }
  }
  if (ks.empty()) throw ConfigError("--ks needs at least one value");
  return ks;
}

std::string sibling_path(const std::string& base, const std::string& suffix) {
  const std::filesystem::path p(base);
  std::filesystem::path out = p.parent_path() / p.stem();
  return out.string() + suffix;
}

RetrievalReport report_for(const Encoder& enc, const FeatureDataset& set,
                           const std::vector<int>& ks, std::uint64_t seed) {
  const Matrix raw = forward(enc, set.features);
  const EmbeddingBatch batch = make_embedding_batch(raw, set.labels);
  return evaluate_retrieval(batch, ks, derive_seed(seed, kReportClusteringTag));
}

int run_synth(const std::string& out, int classes, int per_class, int dim,
              double center_scale, double noise_sigma,
              const std::optional<std::uint64_t>& seed_flag,
              const std::string& out_train, const std::string& out_test,
              double split_fraction) {
  const std::uint64_t seed = resolve_seed(seed_flag, nullptr);
  const FeatureDataset dataset =
      synth_blobs(classes, per_class, dim, center_scale, noise_sigma, seed);
  save_csv(out, dataset);
  ManifestBuilder manifest("synth", seed);
  manifest.doc["parameters"] = {{"classes", classes},
                                {"per_class", per_class},
                                {"dim", dim},
                                {"center_scale", center_scale},
                                {"noise_sigma", noise_sigma},
                                {"split", split_fraction}};
  manifest.output("data", out);
  if (!out_train.empty() || !out_test.empty()) {
    if (out_train.empty() || out_test.empty()) {
      throw ConfigError("--out-train and --out-test must be given together");
    }
    const auto [train_set, test_set] = split_by_class(dataset, split_fraction);
    save_csv(out_train, train_set);
    save_csv(out_test, test_set);
    manifest.output("data_train", out_train);
    manifest.output("data_test", out_test);
  }
  manifest.write(out);
  return 0;
}

int run_train(const std::string& data_path, const std::string& config_path,
              double split_fraction, const std::optional<std::uint64_t>& seed_flag,
              const std::string& out_model, const std::string& out_trace,
              const std::string& ks_text) {
  const FeatureDataset data = load_csv(data_path);
  RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
  cfg.train.seed = resolve_seed(seed_flag, &cfg);
  const std::vector<int> ks = parse_ks(ks_text);

  const auto [train_set, test_set] = split_by_class(data, split_fraction);
  Rng init_rng(derive_seed(cfg.train.seed, kEncoderInitTag));
  Encoder encoder = make_encoder(cfg.encoder, data.dim(), cfg.hidden_dim,
                                 cfg.embedding_dim, init_rng);
  TrainResult result = train(train_set, std::move(encoder), cfg.train);

  save_model(out_model, result.encoder);
  write_trace_csv(out_trace, result.trace);
  const std::string report_train_path = sibling_path(out_model, ".train.json");
  const std::string report_test_path = sibling_path(out_model, ".test.json");
  write_retrieval_json(report_train_path,
                       report_for(result.encoder, train_set, ks, cfg.train.seed));
  write_retrieval_json(report_test_path,
                       report_for(result.encoder, test_set, ks, cfg.train.seed));

  ManifestBuilder manifest("train", cfg.train.seed);
  manifest.input("data", data_path);
  manifest.input("config", config_path);
  manifest.doc["split"] = split_fraction;
  manifest.config_text(config_to_text(cfg));
  manifest.output("model", out_model);
  manifest.output("trace", out_trace);
  manifest.output("report_train", report_train_path);
  manifest.output("report_test", report_test_path);
  manifest.write(out_model);
  return 0;
}

int run_pseudo_train(const std::string& data_path, const std::string& config_path,
                     int k, int rounds, bool use_hard_mining, bool randomize_batch,
                     double split_fraction, bool split_given,
                     const std::optional<std::uint64_t>& seed_flag,
                     const std::string& out_model, const std::string& out_labels,
                     const std::string& out_trace, const std::string& ks_text) {
  const FeatureDataset data = load_csv(data_path);
  RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
  cfg.train.seed = resolve_seed(seed_flag, &cfg);

  FeatureDataset train_set;
  FeatureDataset test_set;
  if (split_given) {
    std::tie(train_set, test_set) = split_by_class(data, split_fraction);
  } else {
    train_set = data;
  }

  PseudoConfig pc;
  pc.k = k > 0 ? k : static_cast<int>(train_set.class_index.size());
  pc.rounds = rounds;
  pc.use_hard_mining = use_hard_mining;
  pc.randomize_batch = randomize_batch;
  pc.train = cfg.train;

  Rng init_rng(derive_seed(cfg.train.seed, kEncoderInitTag));
  Encoder encoder = make_encoder(cfg.encoder, data.dim(), cfg.hidden_dim,
                                 cfg.embedding_dim, init_rng);
  PseudoResult result = pseudo_train(train_set.features, pc, std::move(encoder));

  save_model(out_model, result.encoder);
  write_labels_csv(out_labels, result.pseudo_labels);
  if (!out_trace.empty()) write_trace_csv(out_trace, result.trace);

  ManifestBuilder manifest("pseudo-train", cfg.train.seed);
  manifest.input("data", data_path);
  manifest.input("config", config_path);
  manifest.doc["k"] = pc.k;
  manifest.doc["rounds"] = pc.rounds;
  manifest.doc["use_hard_mining"] = pc.use_hard_mining;
  manifest.doc["randomize_batch"] = pc.randomize_batch;
  if (split_given) manifest.doc["split"] = split_fraction;
  manifest.config_text(config_to_text(cfg));
  manifest.output("model", out_model);
  manifest.output("labels", out_labels);
  manifest.output("trace", out_trace);
  if (split_given) {
    const std::vector<int> ks = parse_ks(ks_text);
    const std::string report_path = sibling_path(out_model, ".test.json");
    write_retrieval_json(report_path,
                         report_for(result.encoder, test_set, ks, cfg.train.seed));
    manifest.output("report_test", report_path);
  }
  manifest.write(out_model);
  return 0;
}

int run_eval(const std::string& data_path, const std::string& model_path,
             const std::string& ks_text, const std::optional<std::uint64_t>& seed_flag,
             const std::string& out_path) {
  const FeatureDataset data = load_csv(data_path);
  const Encoder encoder = load_model(model_path);
  const std::uint64_t seed = resolve_seed(seed_flag, nullptr);
  const RetrievalReport report =
      report_for(encoder, data, parse_ks(ks_text), seed);
  if (out_path.empty()) {
    // No file target; the report goes to standard output.
    char buffer[64];
    auto fmt = [&buffer](double v) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", v);
      return std::string(buffer);
    };
    std::cout << "{\n";
    for (const auto& [k, value] : report.recall_at) {
      std::cout << "  \"recall_at_" << k << "\": " << fmt(value) << ",\n";
    }
    std::cout << "  \"nmi\": " << fmt(report.nmi) << ",\n";
    std::cout << "  \"neg_sim_variance\": " << fmt(report.neg_sim_variance) << ",\n";
    std::cout << "  \"pos_sim_mean\": " << fmt(report.pos_sim_mean) << ",\n";
    std::cout << "  \"neg_sim_mean\": " << fmt(report.neg_sim_mean) << "\n";
    std::cout << "}\n";
    return 0;
  }
  write_retrieval_json(out_path, report);
  ManifestBuilder manifest("eval", seed);
  manifest.input("data", data_path);
  manifest.input("model", model_path);
  manifest.output("report", out_path);
  manifest.write(out_path);
  return 0;
}

int run_analyze(const std::string& data_path, const std::string& model_path,
                int bins, const std::string& out_path) {
  const FeatureDataset data = load_csv(data_path);
  Matrix raw = data.features;
  if (!model_path.empty()) {
    raw = forward(load_model(model_path), data.features);
  }
  const EmbeddingBatch batch = make_embedding_batch(raw, data.labels);
  const SimilarityMatrix sims = similarity_matrix(batch);
  const PairIndex pairs = partition_pairs(data.labels);

  const HistogramReport hist = similarity_histogram(sims, pairs, bins);
  write_histogram_csv(out_path, hist);

  const GaussianFit fit = fit_similarity_gaussians(sims, pairs);
  const RatioFit rf = ratio_fit(fit);
  const LinearRatioFit lf = linear_ratio_fit(fit);
  json fit_doc;
  fit_doc["gaussian"] = {{"mu_pos", fit.mu_pos},
                         {"sigma_pos", fit.sigma_pos},
                         {"mu_neg", fit.mu_neg},
                         {"sigma_neg", fit.sigma_neg}};
  fit_doc["ratio"] = {{"varsigma", rf.varsigma},
                      {"zeta1", rf.zeta1},
                      {"zeta2", rf.zeta2},
                      {"zeta3", rf.zeta3}};
  fit_doc["linear_ratio"] = {{"slope", lf.slope}, {"intercept", lf.intercept}};
  try {
    const SuggestedParameters sp = suggest_parameters(fit, 1.0, 1.0);
    fit_doc["suggested"] = {{"alpha_pos", sp.alpha_pos},
                            {"beta_pos", sp.beta_pos},
                            {"alpha_neg", sp.alpha_neg},
                            {"beta_neg", sp.beta_neg}};
  } catch (const DegenerateFit&) {
    // Suggestion undefined for this fit; the analysis is still useful.
  }
  const std::string fit_path = sibling_path(out_path, ".fit.json");
  write_text_atomic(fit_path, fit_doc.dump(2) + "\n");

  ManifestBuilder manifest("analyze", 0);
  manifest.input("data", data_path);
  manifest.input("model", model_path);
  manifest.doc["bins"] = bins;
  manifest.output("histogram", out_path);
  manifest.output("fit", fit_path);
  manifest.write(out_path);
  return 0;
}

int run_gradcheck(int trials, const std::optional<std::uint64_t>& seed_flag) {
  const std::uint64_t seed = resolve_seed(seed_flag, nullptr);
  const GradCheckSummary summary = run_gradient_check(trials, seed);
  std::printf("max relative gradient error: %.3e over %d batches\n",
              summary.max_error, summary.batches);
  return summary.max_error < 1e-4 ? 0 : 1;
}

int run_ablate(const std::string& data_path, const std::string& config_path,
               double split_fraction, const std::optional<std::uint64_t>& seed_flag,
               const std::string& sweep, const std::string& ks_text,
               const std::string& out_path) {
  const std::size_t eq = sweep.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == sweep.size()) {
    throw ConfigError("--sweep expects key=value1,value2,...");
  }
  const std::string key = sweep.substr(0, eq);
  std::vector<std::string> values;
  std::string current;
  for (char c : sweep.substr(eq + 1) + ",") {
    if (c == ',') {
      if (!current.empty()) values.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  if (values.empty()) throw ConfigError("--sweep needs at least one value");

  const FeatureDataset data = load_csv(data_path);
  const RunConfig base = config_path.empty() ? RunConfig{} : load_config(config_path);
  const std::uint64_t seed = resolve_seed(seed_flag, &base);
  const std::vector<int> ks = parse_ks(ks_text);
  const auto [train_set, test_set] = split_by_class(data, split_fraction);

  std::ofstream out(out_path);
  if (!out) throw ParseError(0, "cannot open " + out_path + " for writing");
  out << "param,value";
  for (int k : ks) out << ",recall_at_" << k;
  out << ",nmi,neg_sim_variance,pos_sim_mean,neg_sim_mean\n";
  char buffer[64];
  auto fmt = [&buffer](double v) {
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return std::string(buffer);
  };

  for (const std::string& value : values) {
    RunConfig cfg = base;
    set_config_key(cfg, key, value);
    validate(cfg.train);
    cfg.train.seed = seed;
    Rng init_rng(derive_seed(seed, kEncoderInitTag));
    Encoder encoder = make_encoder(cfg.encoder, data.dim(), cfg.hidden_dim,
                                   cfg.embedding_dim, init_rng);
    const TrainResult result = train(train_set, std::move(encoder), cfg.train);
    const RetrievalReport report = report_for(result.encoder, test_set, ks, seed);
    out << key << ',' << value;
    for (int k : ks) out << ',' << fmt(report.recall_at.at(k));
    out << ',' << fmt(report.nmi) << ',' << fmt(report.neg_sim_variance) << ','
        << fmt(report.pos_sim_mean) << ',' << fmt(report.neg_sim_mean) << "\n";
  }
  out.close();

  ManifestBuilder manifest("ablate", seed);
  manifest.input("data", data_path);
  manifest.input("config", config_path);
  manifest.doc["sweep"] = sweep;
  manifest.doc["split"] = split_fraction;
  manifest.config_text(config_to_text(base));
  manifest.output("table", out_path);
  manifest.write(out_path);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"contrastive Bayesian metric learning harness", "cbml"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed_flag;

  // synth
  auto* synth = app.add_subcommand("synth", "generate a labeled blob dataset CSV");
  int classes = 4, per_class = 16, dim = 8;
  double center_scale = 1.0, noise_sigma = 0.1, synth_split = 0.5;
  std::string synth_out, synth_out_train, synth_out_test;
  synth->add_option("--classes", classes, "number of classes");
  synth->add_option("--per-class", per_class, "points per class");
  synth->add_option("--dim", dim, "feature dimension");
  synth->add_option("--center-scale", center_scale, "radius of the center sphere");
  synth->add_option("--noise-sigma", noise_sigma, "per-point noise scale");
  synth->add_option("--seed", seed_flag, "random seed");
  synth->add_option("--out", synth_out, "output CSV path")->required();
  synth->add_option("--out-train", synth_out_train, "also write the train-side split CSV");
  synth->add_option("--out-test", synth_out_test, "also write the test-side split CSV");
  synth->add_option("--split", synth_split, "class fraction for --out-train/--out-test");

  // train
  auto* train_cmd = app.add_subcommand("train", "metric learning on labeled features");
  std::string train_data, train_config, out_model = "model.txt", out_trace = "trace.csv";
  std::string ks_text = "1,2,4,8";
  double split_fraction = 0.5;
  train_cmd->add_option("--data", train_data, "input dataset CSV")->required();
  train_cmd->add_option("--config", train_config, "key=value config file");
  train_cmd->add_option("--split", split_fraction, "class fraction on the train side");
  train_cmd->add_option("--seed", seed_flag, "random seed (overrides config)");
  train_cmd->add_option("--out-model", out_model, "model file path");
  train_cmd->add_option("--out-trace", out_trace, "loss trace CSV path");
  train_cmd->add_option("--ks", ks_text, "comma-separated recall cutoffs");

  // pseudo-train
  auto* pseudo_cmd = app.add_subcommand("pseudo-train", "unlabeled training via clustering");
  std::string pseudo_data, pseudo_config, pseudo_out_model = "model.txt";
  std::string pseudo_out_labels = "pseudo_labels.csv", pseudo_out_trace;
  int pseudo_k = 0, pseudo_rounds = 2;
  bool use_hard_mining = false;
  bool randomize_batch = false;
  double pseudo_split = 0.5;
  pseudo_cmd->add_option("--data", pseudo_data, "input dataset CSV")->required();
  pseudo_cmd->add_option("--config", pseudo_config, "key=value config file");
  pseudo_cmd->add_option("--k", pseudo_k, "cluster count (0 = class count)");
  pseudo_cmd->add_option("--rounds", pseudo_rounds, "cluster/train rounds");
  pseudo_cmd->add_flag("--use-hard-mining", use_hard_mining, "mine hard pairs in pseudo mode");
  pseudo_cmd->add_flag("--randomize-batch", randomize_batch, "redraw batch size each round");
  auto* pseudo_split_opt =
      pseudo_cmd->add_option("--split", pseudo_split, "hold out test classes first");
  pseudo_cmd->add_option("--seed", seed_flag, "random seed (overrides config)");
  pseudo_cmd->add_option("--out-model", pseudo_out_model, "model file path");
  pseudo_cmd->add_option("--out-labels", pseudo_out_labels, "pseudo-label CSV path");
  pseudo_cmd->add_option("--out-trace", pseudo_out_trace, "loss trace CSV path");
  pseudo_cmd->add_option("--ks", ks_text, "comma-separated recall cutoffs");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "retrieval report for a saved model");
  std::string eval_data, eval_model, eval_out;
  eval_cmd->add_option("--data", eval_data, "input dataset CSV")->required();
  eval_cmd->add_option("--model", eval_model, "model file path")->required();
  eval_cmd->add_option("--ks", ks_text, "comma-separated recall cutoffs");
  eval_cmd->add_option("--seed", seed_flag, "random seed (report clustering)");
  eval_cmd->add_option("--out", eval_out, "report JSON path (stdout when absent)");

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "similarity distributions and ratio fits");
  std::string analyze_data, analyze_model, analyze_out = "histogram.csv";
  int bins = 64;
  analyze_cmd->add_option("--data", analyze_data, "input dataset CSV")->required();
  analyze_cmd->add_option("--model", analyze_model, "model file path (raw features when absent)");
  analyze_cmd->add_option("--bins", bins, "histogram bin count");
  analyze_cmd->add_option("--out", analyze_out, "histogram CSV path");

  // gradcheck
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference gradient audit");
  int trials = 20;
  gradcheck_cmd->add_option("--trials", trials, "number of random batches");
  gradcheck_cmd->add_option("--seed", seed_flag, "random seed");

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "train once per swept config value");
  std::string ablate_data, ablate_config, sweep, ablate_out = "ablation.csv";
  double ablate_split = 0.5;
  ablate_cmd->add_option("--data", ablate_data, "input dataset CSV")->required();
  ablate_cmd->add_option("--config", ablate_config, "key=value config file");
  ablate_cmd->add_option("--sweep", sweep, "key=v1,v2,... over loss/config keys")->required();
  ablate_cmd->add_option("--split", ablate_split, "class fraction on the train side");
  ablate_cmd->add_option("--seed", seed_flag, "random seed (overrides config)");
  ablate_cmd->add_option("--ks", ks_text, "comma-separated recall cutoffs");
  ablate_cmd->add_option("--out", ablate_out, "comparison table CSV path");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("cbml");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(synth)) {
      return run_synth(synth_out, classes, per_class, dim, center_scale,
                       noise_sigma, seed_flag, synth_out_train, synth_out_test,
                       synth_split);
    }
    if (app.got_subcommand(train_cmd)) {
      return run_train(train_data, train_config, split_fraction, seed_flag,
                       out_model, out_trace, ks_text);
    }
    if (app.got_subcommand(pseudo_cmd)) {
      return run_pseudo_train(pseudo_data, pseudo_config, pseudo_k, pseudo_rounds,
                              use_hard_mining, randomize_batch, pseudo_split,
                              pseudo_split_opt->count() > 0, seed_flag,
                              pseudo_out_model, pseudo_out_labels,
                              pseudo_out_trace, ks_text);
    }
    if (app.got_subcommand(eval_cmd)) {
      return run_eval(eval_data, eval_model, ks_text, seed_flag, eval_out);
    }
    if (app.got_subcommand(analyze_cmd)) {
      return run_analyze(analyze_data, analyze_model, bins, analyze_out);
    }
    if (app.got_subcommand(gradcheck_cmd)) {
      return run_gradcheck(trials, seed_flag);
    }
    if (app.got_subcommand(ablate_cmd)) {
      return run_ablate(ablate_data, ablate_config, ablate_split, seed_flag,
                        sweep, ks_text, ablate_out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace cbml
