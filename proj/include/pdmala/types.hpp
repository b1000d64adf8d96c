#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace pdmala {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class ErrorCode {
  invalid_argument = 1,
  numerical = 2,
  convergence = 3,
  io = 4,
  parse = 5,
};

/// Base exception for every failure raised by the library. The code is what
/// the C API reports to callers.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline Error invalid_argument(const std::string& what) {
  return Error(ErrorCode::invalid_argument, what);
}

inline Error numerical_error(const std::string& what) {
  return Error(ErrorCode::numerical, what);
}

inline Error convergence_error(const std::string& what) {
  return Error(ErrorCode::convergence, what);
}

void require_finite(const Vector& x, const char* what);

}  // namespace pdmala
