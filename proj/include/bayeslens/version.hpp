#pragma once

namespace bayeslens {
inline constexpr const char* kVersion = "0.1.0";
}
