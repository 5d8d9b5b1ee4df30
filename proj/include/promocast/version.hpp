#pragma once

namespace promocast {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace promocast
