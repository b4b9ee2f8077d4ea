#pragma once

#include <stdexcept>
#include <string>

namespace ssdr {

// Malformed or inconsistent input data (files, clouds, partitions).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid run configuration or CLI flags.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ssdr
