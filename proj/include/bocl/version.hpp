#pragma once

namespace bocl {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bocl
