#pragma once

namespace modeshift {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace modeshift
