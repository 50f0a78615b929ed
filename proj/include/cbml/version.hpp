#pragma once

namespace cbml {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cbml
