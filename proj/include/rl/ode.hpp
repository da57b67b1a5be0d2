#pragma once

// Adaptive Dormand-Prince 5(4) stepping with dense output.

#include <functional>
#include <memory>
#include <vector>

namespace rl {

using State = std::vector<double>;
using OdeRhs = std::function<void(const State& x, State& dxdt, double t)>;

struct OdeOptions {
  double abs_tol = 1e-22;
  double rel_tol = 1e-10;
  double dt0 = 1e-3;
  long max_steps = 2000000;
};

/// Thin wrapper that exposes single adaptive steps and interpolation inside
/// the last step, so callers can detect events and sample requested times.
class DenseStepper {
 public:
  DenseStepper(OdeRhs rhs, const State& x0, double t0, const OdeOptions& opt = {});
  ~DenseStepper();
  DenseStepper(const DenseStepper&) = delete;
  DenseStepper& operator=(const DenseStepper&) = delete;

  /// Takes one accepted step; throws NoConvergence after max_steps.
  void step();
  double t() const;
  double t_prev() const;
  const State& state() const;
  /// Dense-output interpolation for t in [t_prev, t].
  void calc(double t, State& x) const;

  /// Steps until t() >= t_end, then interpolates. Returns the state at t_end.
  State advance_to(double t_end);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Convenience: integrate from t0 to t1 and return the final state.
State integrate(const OdeRhs& rhs, State x0, double t0, double t1, const OdeOptions& opt = {});

}  // namespace rl
