#pragma once

namespace qscreen {

inline constexpr const char* kVersion = "0.1.0";

} // namespace qscreen
