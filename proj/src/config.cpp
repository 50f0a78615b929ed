#include "cbml/config.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "cbml/errors.hpp"

namespace cbml {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

double to_real(const std::string& value, std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size()) {
    throw ParseError(line_no, "expected a real number, got '" + value + "'");
  }
  return v;
}

template <typename Int>
Int to_integer(const std::string& value, std::size_t line_no) {
  Int v{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ParseError(line_no, "expected an integer, got '" + value + "'");
  }
  return v;
}

}  // namespace

void set_config_key(RunConfig& cfg, const std::string& key,
                    const std::string& value, std::size_t line_no) {
  LossConfig& loss = cfg.train.loss;
  if (key == "alpha_pos") loss.alpha_pos = to_real(value, line_no);
  else if (key == "beta_pos") loss.beta_pos = to_real(value, line_no);
  else if (key == "alpha_neg") loss.alpha_neg = to_real(value, line_no);
  else if (key == "beta_neg") loss.beta_neg = to_real(value, line_no);
  else if (key == "delta_pos") loss.delta_pos = to_real(value, line_no);
  else if (key == "delta_neg") loss.delta_neg = to_real(value, line_no);
  else if (key == "lambda") loss.lambda = to_real(value, line_no);
  else if (key == "gamma") loss.gamma = to_real(value, line_no);
  else if (key == "epsilon") loss.epsilon = to_real(value, line_no);
  else if (key == "variant") loss.variant = variant_from_name(value);
  else if (key == "delta_mode") loss.delta_mode = delta_mode_from_name(value);
  else if (key == "batch_classes") cfg.train.batch_classes = to_integer<int>(value, line_no);
  else if (key == "batch_per_class") cfg.train.batch_per_class = to_integer<int>(value, line_no);
  else if (key == "steps") cfg.train.steps = to_integer<int>(value, line_no);
  else if (key == "learning_rate") cfg.train.adam.learning_rate = to_real(value, line_no);
  else if (key == "adam_beta1") cfg.train.adam.beta1 = to_real(value, line_no);
  else if (key == "adam_beta2") cfg.train.adam.beta2 = to_real(value, line_no);
  else if (key == "adam_eps") cfg.train.adam.eps = to_real(value, line_no);
  else if (key == "seed") {
    cfg.train.seed = to_integer<std::uint64_t>(value, line_no);
    cfg.seed_from_file = true;
  } else if (key == "encoder") {
    cfg.encoder = encoder_kind_from_name(value);
  } else if (key == "hidden_dim") {
    cfg.hidden_dim = to_integer<std::size_t>(value, line_no);
  } else if (key == "embedding_dim") {
    cfg.embedding_dim = to_integer<std::size_t>(value, line_no);
  } else {
    throw ConfigError("unknown config key '" + key + "'" +
                      (line_no > 0 ? " on line " + std::to_string(line_no) : ""));
  }
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(line_no, "expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "empty key");
    if (value.empty()) throw ParseError(line_no, "empty value for '" + key + "'");
    if (!seen.insert(key).second) {
      throw ParseError(line_no, "key '" + key + "' appears twice");
    }
    set_config_key(cfg, key, value, line_no);
  }
  validate(cfg.train);
  if (cfg.hidden_dim < 1) throw ConfigError("hidden_dim must be at least 1");
  if (cfg.embedding_dim < 2) throw ConfigError("embedding_dim must be at least 2");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

std::string config_to_text(const RunConfig& cfg) {
  std::ostringstream out;
  char buffer[64];
  auto real = [&buffer](double v) {
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return std::string(buffer);
  };
  const LossConfig& loss = cfg.train.loss;
  out << "alpha_pos = " << real(loss.alpha_pos) << "\n";
  out << "beta_pos = " << real(loss.beta_pos) << "\n";
  out << "alpha_neg = " << real(loss.alpha_neg) << "\n";
  out << "beta_neg = " << real(loss.beta_neg) << "\n";
  out << "delta_pos = " << real(loss.delta_pos) << "\n";
  out << "delta_neg = " << real(loss.delta_neg) << "\n";
  out << "lambda = " << real(loss.lambda) << "\n";
  out << "gamma = " << real(loss.gamma) << "\n";
  out << "epsilon = " << real(loss.epsilon) << "\n";
  out << "variant = " << variant_name(loss.variant) << "\n";
  out << "delta_mode = " << delta_mode_name(loss.delta_mode) << "\n";
  out << "batch_classes = " << cfg.train.batch_classes << "\n";
  out << "batch_per_class = " << cfg.train.batch_per_class << "\n";
  out << "steps = " << cfg.train.steps << "\n";
  out << "learning_rate = " << real(cfg.train.adam.learning_rate) << "\n";
  out << "adam_beta1 = " << real(cfg.train.adam.beta1) << "\n";
  out << "adam_beta2 = " << real(cfg.train.adam.beta2) << "\n";
  out << "adam_eps = " << real(cfg.train.adam.eps) << "\n";
  out << "seed = " << cfg.train.seed << "\n";
  out << "encoder = " << encoder_kind_name(cfg.encoder) << "\n";
  out << "hidden_dim = " << cfg.hidden_dim << "\n";
  out << "embedding_dim = " << cfg.embedding_dim << "\n";
  return out.str();
}

}  // namespace cbml
