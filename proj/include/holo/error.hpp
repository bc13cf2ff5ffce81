#pragma once

#include <stdexcept>
#include <string>

namespace holo {

/// Rejected input: bad dimensions, invalid values, malformed files.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation produced a non-finite or otherwise unusable result.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InputError(msg);
}

}  // namespace holo
