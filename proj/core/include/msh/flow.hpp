#pragma once

#include <vector>

#include "msh/dataterm.hpp"
#include "msh/kernel.hpp"
#include "msh/types.hpp"

namespace msh::flow {

// alpha[t] holds the momenta of all points at timestep t, t = 0..T-1.
using ControlTrajectory = std::vector<Points>;
// x[t] holds point positions, t = 0..T. dt = 1/T throughout.
using StateTrajectory = std::vector<Points>;

ControlTrajectory zero_control(int steps, int points);

// Explicit Euler: x[t+1] = x[t] + dt K(x[t], x[t]) alpha[t].
StateTrajectory shoot(const kernel::KernelSpec& k, const Points& q0,
                      const ControlTrajectory& alpha);

// (1/2) sum_t dt alpha[t].K(x[t])alpha[t] + U(x[T]).
double reduced_cost(const kernel::KernelSpec& k, const Points& q0, const ControlTrajectory& alpha,
                    const dataterm::DataTerm& U);

enum class GradMode { kernel, hilbert };

// Exact gradient of reduced_cost in the control coordinates (mode kernel),
// obtained by transporting the endpoint cost backward through the Euler
// recursion. Mode hilbert returns the same gradient premultiplied by the
// inverse Gram at each timestep: dt (alpha[t] - p[t+1]); the two vanish on
// exactly the same controls and satisfy g_kernel = gram * g_hilbert.
ControlTrajectory adjoint_grad(const kernel::KernelSpec& k, const Points& q0,
                               const ControlTrajectory& alpha, const dataterm::DataTerm& U,
                               GradMode mode);

// (1/2) alpha.K(x)alpha at one timestep; constant along extremals up to O(dt).
double hamiltonian(const kernel::KernelSpec& k, const Points& x, const Points& alpha);

namespace detail {

// One backward Euler-transport step shared with the multishape objective:
//   xbar_t = xbar_next
//          + dt * [sum_j g1(x_i,x_j, xbar_next_i, alpha_j) + sum_j g1(x_i,x_j, alpha_i, xbar_next_j)]
//          + dt * sum_j g1(x_i,x_j, alpha_i, alpha_j)
// where g1 is the kernel grad1_dot contraction; the last term is the
// position derivative of the timestep's kinetic energy.
Points pullback_step(const kernel::KernelSpec& k, const Points& x, const Points& alpha,
                     const Points& xbar_next, double dt);

void check_finite(const Points& x, int timestep);

}  // namespace detail

}  // namespace msh::flow
