#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace coupled {

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double value);

// Strict finite-double parse of a whole cell; throws DataError with `where` on failure.
double parse_finite_double(std::string_view cell, const std::string& where);

// Split one CSV line on commas. No quoting; a trailing '\r' is stripped first.
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace coupled
