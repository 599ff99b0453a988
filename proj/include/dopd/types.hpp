#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace dopd {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Input or configuration rejected before any computation runs.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A run was aborted mid-flight (non-finite state, broken invariant).
class RuntimeAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace dopd
