#pragma once

namespace alotune {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace alotune
