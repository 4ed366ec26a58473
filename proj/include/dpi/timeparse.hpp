#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace dpi {

// "2018-09-07T01:07:14.599Z" -> milliseconds since the Unix epoch.
// Accepts 0..9 fractional digits; anything past millisecond precision
// must be zero. Throws std::invalid_argument on malformed input.
int64_t parse_iso8601_ms(std::string_view s);

// Inverse of parse_iso8601_ms, always with exactly 3 fractional digits.
std::string format_iso8601_ms(int64_t ms);

}
