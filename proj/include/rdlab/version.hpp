#pragma once

namespace rdlab {

inline constexpr const char* kVersion = "rdlab 0.1.0";

} // namespace rdlab
