#pragma once

#include <string>
#include <string_view>

namespace pdmala {

/// Shortest decimal text that round-trips to the same double; "nan", "inf"
/// and "-inf" for non-finite values.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace pdmala
