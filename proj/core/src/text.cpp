#include "coupled/text.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

#include "coupled/errors.hpp"

namespace coupled {

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_finite_double(std::string_view cell, const std::string& where) {
  double out = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto res = std::from_chars(first, last, out);
  if (res.ec != std::errc() || res.ptr != last || cell.empty()) {
    throw DataError(where + ": cannot parse '" + std::string(cell) + "' as a number");
  }
  if (!std::isfinite(out)) {
    throw DataError(where + ": non-finite value '" + std::string(cell) + "'");
  }
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.emplace_back(line.substr(start));
      break;
    }
    cells.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

}  // namespace coupled
