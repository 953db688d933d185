#pragma once

namespace qhash {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace qhash
