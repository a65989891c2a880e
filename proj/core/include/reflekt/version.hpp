#pragma once

namespace reflekt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace reflekt
