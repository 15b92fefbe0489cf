#pragma once

#include <string>
#include <string_view>

namespace gwr {

// Shortest decimal text that parses back to the identical double.
std::string format_exact(double value);

// Strict parse of a full token; throws ParseError on trailing garbage or empty input.
double parse_double(std::string_view text);
long long parse_integer(std::string_view text);

}  // namespace gwr
