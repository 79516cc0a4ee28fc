#pragma once

namespace memsat {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace memsat
