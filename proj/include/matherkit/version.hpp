#pragma once

namespace matherkit {

inline constexpr const char* kVersion = "0.1.0";

} // namespace matherkit
