#pragma once

namespace branchlab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace branchlab
