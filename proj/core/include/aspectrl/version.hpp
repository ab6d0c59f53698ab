#pragma once

namespace aspectrl {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace aspectrl
