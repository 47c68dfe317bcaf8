#pragma once

namespace kitwpa {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace kitwpa
