#pragma once

namespace coupled {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace coupled
