#pragma once

namespace fbmilt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fbmilt
