#pragma once

namespace sfmttr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sfmttr
