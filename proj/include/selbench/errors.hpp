#pragma once

#include <stdexcept>
#include <string>

namespace selbench {

// Configuration problems (bad run config, bad parameters). CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Dataset problems (unreadable file, parse failure, invalid data). CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace selbench
