#ifndef MEMASYM_ERROR_HPP
#define MEMASYM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace memasym {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// A probability vector or matrix that is off its simplex by more than the
// renormalization slack.
class SimplexError : public Error {
 public:
  using Error::Error;
};

// KL divergence (or log X) evaluated where the reference point has mass but
// the argument has none. Distinct from numeric failure: the true value is +inf.
class InfiniteDivergence : public Error {
 public:
  using Error::Error;
};

// The LP solver failed. For finite zero-sum games an equilibrium always exists,
// so this always means a bug, never "no equilibrium".
class SolverError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError("dimension mismatch: " + what);
}

}  // namespace memasym

#endif  // MEMASYM_ERROR_HPP
