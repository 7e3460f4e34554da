#pragma once

namespace nzprop {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace nzprop
