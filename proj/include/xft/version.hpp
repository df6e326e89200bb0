#pragma once

namespace xft {

inline constexpr const char* kVersion = "0.1.0";

} // namespace xft
