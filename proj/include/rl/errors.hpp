#pragma once

#include <stdexcept>
#include <string>

namespace rl {

// Failure categories. The CLI maps Validation to exit code 2 and everything
// else to exit code 3.
enum class ErrorKind {
  Validation,      // bad input: outside the domain of an operation
  Singular,        // operation undefined at this input (diagonal, sigma = 0, ...)
  NoConvergence,   // iterative solve did not converge
  ConjugatePoint,  // Jacobi determinant vanished
  ModelValidity,   // perturbed metric not positive definite, degenerate horizons, ...
  Accuracy,        // internal consistency check failed (Wronskian drift, truncation)
  NearResonance,   // spectral parameter too close to a pole
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace rl
