#pragma once

#include <stdexcept>
#include <string>

namespace coupled {

// Bad parameters, sizes, grids, method names. CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Bad file contents: parse failures, non-finite cells, label problems. Exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace coupled
