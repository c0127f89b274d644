#pragma once

#include <string_view>

namespace alseg {

// Stamped into manifests and checkpoint headers.
inline constexpr std::string_view kVersion = "0.1.0";

}  // namespace alseg
