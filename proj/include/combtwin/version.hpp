#pragma once

namespace combtwin {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kSeriesBinaryVersion = 1;

}  // namespace combtwin
