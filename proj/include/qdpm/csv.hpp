#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qdpm::csv {

/// Shortest decimal text that reads back to the same double. "nan"/"inf"
/// for non-finite values.
std::string number(double value);

/// Splits one CSV line on commas. Quoting is not supported; none of the
/// files written by this project need it.
std::vector<std::string> split(std::string_view line);

/// Parses a double, throwing ConfigError with `what` in the message.
double parse_double(std::string_view text, std::string_view what);
unsigned long long parse_unsigned(std::string_view text, std::string_view what);

}  // namespace qdpm::csv
