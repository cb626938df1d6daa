#pragma once

namespace binsleuth {

inline constexpr const char* kToolVersion = "0.1.0";

} // namespace binsleuth
