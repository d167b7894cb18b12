#pragma once

namespace bwmarket {

inline constexpr const char* kVersion = "0.1.0";

} // namespace bwmarket
