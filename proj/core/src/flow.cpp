#include "msh/flow.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace msh::flow {

ControlTrajectory zero_control(int steps, int points) {
  return ControlTrajectory(steps, Points::Zero(points, 3));
}

namespace detail {

void check_finite(const Points& x, int timestep) {
  if (!x.allFinite())
    throw std::runtime_error("flow: state not finite at timestep " + std::to_string(timestep) +
                             " (controls too large for this kernel width?)");
}

Points pullback_step(const kernel::KernelSpec& k, const Points& x, const Points& alpha,
                     const Points& xbar_next, double dt) {
  Points xbar = xbar_next;
  kernel::add_grad1_contraction(k, x, x, xbar_next, alpha, dt, xbar);
  kernel::add_grad1_contraction(k, x, x, alpha, xbar_next, dt, xbar);
  kernel::add_grad1_contraction(k, x, x, alpha, alpha, dt, xbar);
  return xbar;
}

}  // namespace detail

StateTrajectory shoot(const kernel::KernelSpec& k, const Points& q0,
                      const ControlTrajectory& alpha) {
  const int T = static_cast<int>(alpha.size());
  if (T == 0) throw std::invalid_argument("flow::shoot: empty control trajectory");
  const double dt = 1.0 / T;
  StateTrajectory x(T + 1);
  x[0] = q0;
  for (int t = 0; t < T; ++t) {
    if (alpha[t].rows() != q0.rows())
      throw std::invalid_argument("flow::shoot: control size mismatch at timestep " +
                                  std::to_string(t));
    x[t + 1] = x[t] + dt * (kernel::gram(k, x[t]) * alpha[t]);
    detail::check_finite(x[t + 1], t + 1);
  }
  return x;
}

double reduced_cost(const kernel::KernelSpec& k, const Points& q0, const ControlTrajectory& alpha,
                    const dataterm::DataTerm& U) {
  const int T = static_cast<int>(alpha.size());
  const double dt = 1.0 / T;
  StateTrajectory x = shoot(k, q0, alpha);
  double kinetic = 0.0;
  for (int t = 0; t < T; ++t) {
    kinetic += 0.5 * dt * (alpha[t].transpose() * (kernel::gram(k, x[t]) * alpha[t])).trace();
  }
  return kinetic + U.cost(x[T]);
}

ControlTrajectory adjoint_grad(const kernel::KernelSpec& k, const Points& q0,
                               const ControlTrajectory& alpha, const dataterm::DataTerm& U,
                               GradMode mode) {
  const int T = static_cast<int>(alpha.size());
  const double dt = 1.0 / T;
  StateTrajectory x = shoot(k, q0, alpha);

  ControlTrajectory grad(T);
  Points xbar = U.gradient(x[T]);  // accumulated d(cost)/d(x[t+1]), i.e. -p[t+1]
  for (int t = T - 1; t >= 0; --t) {
    Points sum = alpha[t] + xbar;
    if (mode == GradMode::kernel) {
      grad[t] = dt * (kernel::gram(k, x[t]) * sum);
    } else {
      grad[t] = dt * sum;
    }
    if (t > 0) xbar = detail::pullback_step(k, x[t], alpha[t], xbar, dt);
  }
  return grad;
}

double hamiltonian(const kernel::KernelSpec& k, const Points& x, const Points& alpha) {
  return 0.5 * (alpha.transpose() * (kernel::gram(k, x) * alpha)).trace();
}

}  // namespace msh::flow
