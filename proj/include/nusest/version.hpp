#pragma once

namespace nusest {

inline constexpr const char* kVersion = "0.1.0";

}
