#pragma once

#include <iosfwd>

#include "gwr/params.hpp"

namespace gwr::detail {

// "params" line: every field, in declaration order; max_neurons 0 means unbounded.
void write_params(std::ostream& out, const GwrParams& params);
GwrParams read_params(std::istream& in);

}  // namespace gwr::detail
