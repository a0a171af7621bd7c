#pragma once

namespace hmnem {

inline constexpr const char* version = "1.0.0";

}  // namespace hmnem
