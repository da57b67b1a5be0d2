#include "rl/ode.hpp"

#include <boost/numeric/odeint.hpp>

#include "rl/errors.hpp"

namespace rl {

namespace odeint = boost::numeric::odeint;

struct DenseStepper::Impl {
  using Base = odeint::runge_kutta_dopri5<State>;
  using Dense = odeint::result_of::make_dense_output<Base>::type;
  OdeRhs rhs;
  Dense stepper;
  long steps = 0;
  long max_steps;
  Impl(OdeRhs f, const OdeOptions& opt)
      : rhs(std::move(f)), stepper(odeint::make_dense_output(opt.abs_tol, opt.rel_tol, Base())),
        max_steps(opt.max_steps) {}
};

DenseStepper::DenseStepper(OdeRhs rhs, const State& x0, double t0, const OdeOptions& opt)
    : impl_(std::make_unique<Impl>(std::move(rhs), opt)) {
  impl_->stepper.initialize(x0, t0, opt.dt0);
}

DenseStepper::~DenseStepper() = default;

void DenseStepper::step() {
  if (++impl_->steps > impl_->max_steps) fail(ErrorKind::NoConvergence, "ODE step budget exhausted");
  auto& f = impl_->rhs;
  impl_->stepper.do_step([&f](const State& x, State& dx, double t) { f(x, dx, t); });
}

double DenseStepper::t() const { return impl_->stepper.current_time(); }
double DenseStepper::t_prev() const { return impl_->stepper.previous_time(); }
const State& DenseStepper::state() const { return impl_->stepper.current_state(); }
void DenseStepper::calc(double t, State& x) const { impl_->stepper.calc_state(t, x); }

State DenseStepper::advance_to(double t_end) {
  while (t() < t_end) step();
  State x(state().size());
  calc(t_end, x);
  return x;
}

State integrate(const OdeRhs& rhs, State x0, double t0, double t1, const OdeOptions& opt) {
  if (t1 == t0) return x0;
  DenseStepper st(rhs, x0, t0, opt);
  return st.advance_to(t1);
}

}  // namespace rl
