#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace repute {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// Parses a double; throws ParseError on trailing garbage or empty input.
double parse_double(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

}  // namespace repute
