#pragma once

#include <string>

#include "cbml/encoder.hpp"

namespace cbml {

/// Versioned text format: a magic line, the encoder kind and dims, then each
/// parameter tensor as 17-significant-digit decimals. Loading a file with a
/// different magic or version fails rather than guessing.
void save_model(const std::string& path, const Encoder& enc);

Encoder load_model(const std::string& path);

}  // namespace cbml
