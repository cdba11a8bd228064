#pragma once

namespace codetree {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace codetree
