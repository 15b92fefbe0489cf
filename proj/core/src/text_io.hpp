#pragma once

// Token-level helpers shared by the snapshot readers and writers.

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>

#include "gwr/error.hpp"
#include "gwr/number_format.hpp"

namespace gwr::detail {

inline std::string next_token(std::istream& in, std::string_view context) {
    std::string token;
    if (!(in >> token)) {
        throw ParseError("unexpected end of input while reading " + std::string(context));
    }
    return token;
}

inline void expect_token(std::istream& in, std::string_view expected) {
    const std::string token = next_token(in, expected);
    if (token != expected) {
        throw ParseError("expected '" + std::string(expected) + "' but found '" + token + "'");
    }
}

inline double read_double(std::istream& in, std::string_view context) {
    return parse_double(next_token(in, context));
}

inline std::size_t read_count(std::istream& in, std::string_view context) {
    const long long value = parse_integer(next_token(in, context));
    if (value < 0) throw ParseError("negative count for " + std::string(context));
    return static_cast<std::size_t>(value);
}

}  // namespace gwr::detail
