#pragma once

#include <stdexcept>
#include <string>

namespace sagnas {

// Exit-code families used by the CLI: config (2), data (3), numerical (4).

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by discretization when every input edge of a node was pruned.
class ArchitectureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sagnas
