#pragma once

namespace dpi {

inline constexpr const char* kVersion = "0.1.0";

}
