#pragma once

namespace gcb {

inline constexpr const char* kVersion = "gcb-lab 1.0.0";

}  // namespace gcb
