#pragma once

namespace leia {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace leia
