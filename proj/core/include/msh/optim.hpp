#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

namespace msh::optim {

struct NlcgConfig {
  int max_iters = 200;
  double grad_tol = 1e-4;  // relative to the gradient norm at x0
  int restart_every = 50;
  double initial_step = 1.0;
  double sufficient_decrease = 1e-4;  // Armijo c1
  double backtrack = 0.5;
  int max_backtracks = 40;
};

struct AlConfig {
  int max_outer = 30;
  double inner_tol_initial = 1e-2;
  double inner_tol_final = 1e-4;
  double inner_tol_decay = 0.5;   // geometric schedule toward inner_tol_final
  double constraint_tol = 1e-3;   // relative to the problem's constraint scale
  double mu0 = 1.0;               // applied to constraints scaled by the geometry
  double rho_mu = 2.0;
  double decrease_required = 0.5;
  double mu_max_factor = 1e12;    // mu > mu_max_factor * mu0 means infeasible
};

// Objective with gradient; pre_grad (optional output) is a preconditioned
// gradient used for search directions while grad drives slopes and stopping.
// Implementations may leave pre_grad untouched to use plain directions.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual double eval(const Eigen::VectorXd& x, Eigen::VectorXd* grad,
                      Eigen::VectorXd* pre_grad) const = 0;
};

// Optional per-iteration metric recorded in the trace (the AL driver reports
// the constraint sup norm of the latest evaluation through this hook).
using RowMetric = std::function<double()>;

struct IterRow {
  int outer = 0;
  int inner = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double metric = 0.0;
  bool has_metric = false;
  double mu = 0.0;
  bool has_mu = false;
  double step = 0.0;
};

// stalled: accepted steps stopped decreasing the objective at numerical
// precision before the gradient tolerance was met; the iterate is the best
// this arithmetic can do.
enum class NlcgStatus { converged, max_iterations, line_search_failed, stalled };

struct NlcgResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_norm = 0.0;
  double initial_grad_norm = 0.0;
  int iterations = 0;
  NlcgStatus status = NlcgStatus::converged;
  std::string message;
  std::vector<IterRow> trace;
};

// Polak-Ribiere+ nonlinear CG with Armijo backtracking; deterministic.
// A failed line search falls back to steepest descent once, then aborts.
NlcgResult nlcg_minimize(const Objective& obj, const Eigen::VectorXd& x0, const NlcgConfig& cfg,
                         const RowMetric& metric = nullptr);

// Equality-constrained problem in augmented Lagrangian form. The object owns
// its multiplier state: eval uses the current (lambda, mu), update_multipliers
// performs lambda' = lambda - mu C plus the mu schedule.
class AlProblem {
 public:
  virtual ~AlProblem() = default;
  virtual int dim() const = 0;
  virtual double eval(const Eigen::VectorXd& x, Eigen::VectorXd* grad,
                      Eigen::VectorXd* pre_grad) = 0;
  virtual double constraint_inf_norm(const Eigen::VectorXd& x) = 0;
  virtual void update_multipliers(const Eigen::VectorXd& x, double decrease_required,
                                  double rho_mu) = 0;
  virtual double mu() const = 0;
  virtual double constraint_scale() const { return 1.0; }
  // Metric recorded per accepted inner iterate; defaults to the constraint
  // norm of the most recent evaluation.
  virtual double last_eval_constraint() const = 0;
};

enum class AlStatus { converged, max_outer, infeasible, line_search_failed };

struct AlResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double constraint_inf = 0.0;  // unscaled
  int outer_iterations = 0;
  int inner_iterations = 0;
  AlStatus status = AlStatus::converged;
  std::string message;
  std::vector<IterRow> trace;
};

AlResult al_solve(AlProblem& problem, const Eigen::VectorXd& x0, const AlConfig& al_cfg,
                  const NlcgConfig& nlcg_cfg);

// CSV with columns outer,inner,objective,grad_norm,constraint_inf_norm,mu,step_len.
// Unused columns stay empty (unconstrained runs have no constraint or mu).
std::string trace_csv(const std::vector<IterRow>& rows);
void write_trace_csv(const std::string& path, const std::vector<IterRow>& rows);

}  // namespace msh::optim
