#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fracns {

/// Invalid user-supplied parameters (maps to CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Grid too coarse for an alias-free quadratic product.
class AliasingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite state detected during time stepping.
class NumericalAbort : public std::runtime_error {
 public:
  NumericalAbort(const std::string& what, std::uint64_t step)
      : std::runtime_error(what), step_(step) {}
  std::uint64_t step() const { return step_; }

 private:
  std::uint64_t step_;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Autocorrelation data failed the stationarity screen.
class NonStationaryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fracns
