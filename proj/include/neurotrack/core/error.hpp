#pragma once

#include <stdexcept>
#include <string>

namespace neurotrack {

// Precondition / argument violations. Thrown by every operation whose
// documented "errors" contract is violated by the caller.
class InvalidArgument : public std::invalid_argument {
 public:
  explicit InvalidArgument(const std::string& msg) : std::invalid_argument(msg) {}
};

// Runtime failures: I/O, non-convergence, non-finite numerics.
class RuntimeError : public std::runtime_error {
 public:
  explicit RuntimeError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

inline void ensure(bool cond, const std::string& msg) {
  if (!cond) throw RuntimeError(msg);
}

}  // namespace detail
}  // namespace neurotrack
