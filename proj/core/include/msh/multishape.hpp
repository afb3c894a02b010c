#pragma once

#include <memory>
#include <vector>

#include "msh/dataterm.hpp"
#include "msh/flow.hpp"
#include "msh/geom.hpp"
#include "msh/kernel.hpp"
#include "msh/types.hpp"

namespace msh::multishape {

enum class Mode { none, identity, sliding };

// Controls: one momentum trajectory per shape plus one for the background,
// which moves all background points jointly.
struct MultiControl {
  std::vector<flow::ControlTrajectory> alphas;  // alphas[k][t]: m_k x 3
  flow::ControlTrajectory beta;                 // beta[t]: m x 3
};

struct MultiShapeState {
  std::vector<flow::StateTrajectory> x;  // x[k][t]: m_k x 3, t = 0..T
  flow::StateTrajectory z;               // z[t]: m x 3
};

// Time-resolved multipliers, one flat block per timestep:
//   identity: 3 m doubles per t, t = 0..T (t = 0 stays zero; the constraint
//             holds there by construction),
//   sliding:  one double per interface face per t, t = 0..T-1 (the timestep
//             whose velocities it constrains).
struct ALState {
  std::vector<Eigen::VectorXd> lambda;
  double mu = 1.0;
  std::vector<double> history;  // constraint sup norm at each completed outer iteration
};

struct MultiShapeProblem {
  geom::MultiShapeComplex complex;
  std::vector<kernel::KernelSpec> shape_kernels;  // one per shape
  kernel::KernelSpec background_kernel;
  // Endpoint costs U_k on the shape copies and (typically identical) terms on
  // the background blocks. Null entries mean zero cost.
  std::vector<std::shared_ptr<const dataterm::DataTerm>> shape_terms;
  std::vector<std::shared_ptr<const dataterm::DataTerm>> background_terms;
  int steps = 10;
  Mode mode = Mode::identity;

  int shape_count() const { return complex.shape_count(); }
  int background_count() const { return complex.total; }
  int total_faces() const;
};

MultiControl zero_control(const MultiShapeProblem& p);
ALState zero_al(const MultiShapeProblem& p, double mu0 = 1.0);

MultiShapeState forward(const MultiShapeProblem& p, const MultiControl& ctrl);

// x - z per shape block; entry t is the flat [shape][vertex][3] block.
std::vector<Eigen::VectorXd> identity_residual(const MultiShapeProblem& p,
                                               const MultiShapeState& state);

// Gamma[t][f] = sum_{j in f} det(e'_jf, e''_jf, u_k(z_j) - u_n(z_j))
// with e' x e'' the area-weighted normal of background face f at time t.
// Entry t is the flat [shape][face] block, t = 0..T-1.
std::vector<Eigen::VectorXd> sliding_residual(const MultiShapeProblem& p,
                                              const MultiShapeState& state,
                                              const MultiControl& ctrl);

// Mode dispatch; Mode::none yields an empty vector.
std::vector<Eigen::VectorXd> residual(const MultiShapeProblem& p, const MultiShapeState& state,
                                      const MultiControl& ctrl);

double constraint_inf_norm(const std::vector<Eigen::VectorXd>& res);

// Kinetic terms + endpoint costs - sum_t dt lambda.C + (mu/2) sum_t dt |C|^2,
// with C the identity residual (quadrature over t = 1..T; the t = 0 term is
// identically zero) or Gamma (t = 0..T-1).
double al_objective(const MultiShapeProblem& p, const MultiControl& ctrl, const ALState& al);

// Exact gradient of al_objective in the control coordinates (mode kernel);
// mode hilbert applies the per-space Gram inverses, which for the background
// block turns the interface force K(z,z) theta into theta itself.
MultiControl al_gradient(const MultiShapeProblem& p, const MultiControl& ctrl, const ALState& al,
                         flow::GradMode mode);

// Single forward/backward pass producing everything the solver consumes.
struct EvalResult {
  double value = 0.0;
  double constraint_inf = 0.0;
  MultiControl grad_kernel;
  MultiControl grad_hilbert;
};
EvalResult al_eval(const MultiShapeProblem& p, const MultiControl& ctrl, const ALState& al,
                   bool want_grad);

// lambda' = lambda - mu C per timestep; mu is multiplied by rho_mu only when
// the constraint sup norm failed to shrink by decrease_required.
ALState al_update(const ALState& al, const std::vector<Eigen::VectorXd>& res,
                  double decrease_required, double rho_mu);

// Flat control vector in artifact order: shapes first (t-major, row-major
// vertex blocks), background last.
int control_dim(const MultiShapeProblem& p);
Eigen::VectorXd pack(const MultiShapeProblem& p, const MultiControl& ctrl);
MultiControl unpack(const MultiShapeProblem& p, const Eigen::VectorXd& v);

// Bounding-box diagonal of the template complex; constraint tolerances are
// taken relative to this scale (cubed for sliding: area times velocity).
double geometry_scale(const MultiShapeProblem& p);
double constraint_scale(const MultiShapeProblem& p);

}  // namespace msh::multishape
