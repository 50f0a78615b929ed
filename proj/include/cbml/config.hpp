#pragma once

#include <string>

#include "cbml/encoder.hpp"
#include "cbml/trainer.hpp"

namespace cbml {

/// Everything a training run needs beyond the dataset itself.
struct RunConfig {
  TrainConfig train;
  EncoderKind encoder = EncoderKind::linear;
  std::size_t hidden_dim = 32;    // mlp2 only
  std::size_t embedding_dim = 8;  // linear and mlp2 output width
  bool seed_from_file = false;    // true when the parsed text carried `seed`
};

/// Flat `key = value` lines, `#` starts a comment, blank lines ignored.
/// Keys mirror the config field names; unknown or repeated keys are errors.
RunConfig parse_config_text(const std::string& text);

/// Applies one key/value pair; the single source of truth for key names.
/// Throws ConfigError for unknown keys and ParseError for bad values.
void set_config_key(RunConfig& cfg, const std::string& key,
                    const std::string& value, std::size_t line_no = 0);

RunConfig load_config(const std::string& path);

/// Every key materialized, in a fixed order, parseable by parse_config_text.
std::string config_to_text(const RunConfig& cfg);

}  // namespace cbml
