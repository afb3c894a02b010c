#pragma once

#include <string>
#include <vector>

#include "msh/io.hpp"
#include "msh/markers.hpp"
#include "msh/multishape.hpp"
#include "msh/optim.hpp"

namespace msh::driver {

// Augmented Lagrangian view of a multishape problem; owns the multiplier
// state across outer iterations.
class MultiShapeAlProblem final : public optim::AlProblem {
 public:
  MultiShapeAlProblem(const multishape::MultiShapeProblem& p, double mu0);

  int dim() const override;
  double eval(const Eigen::VectorXd& x, Eigen::VectorXd* grad,
              Eigen::VectorXd* pre_grad) override;
  double constraint_inf_norm(const Eigen::VectorXd& x) override;
  void update_multipliers(const Eigen::VectorXd& x, double decrease_required,
                          double rho_mu) override;
  double mu() const override { return al_.mu; }
  double constraint_scale() const override;
  double last_eval_constraint() const override { return last_constraint_; }

  const multishape::ALState& al_state() const { return al_; }

 private:
  const multishape::MultiShapeProblem& p_;
  multishape::ALState al_;
  double last_constraint_ = 0.0;
};

struct RunOutcome {
  int exit_code = 0;    // 0 converged, 2 iteration limit, 3 infeasible
  std::string message;  // nonempty when exit_code != 0
  io::RunConfig config;  // derived defaults resolved (kernel widths)
  std::vector<io::FlowRecord> flows;  // shapes then background; single mode: the union
  std::vector<optim::IterRow> trace;
  double objective = 0.0;
  double constraint_inf = 0.0;     // unscaled sup norm; 0 when unconstrained
  double data_cost = 0.0;          // shape endpoint terms at the solution
  double initial_data_cost = 0.0;  // same terms at zero control
  // Multi modes only: the assembled problem and the solution in its native layout.
  multishape::MultiShapeProblem problem;
  multishape::MultiShapeState state;
  multishape::MultiControl controls;
};

// Loads meshes, assembles the requested problem, optimizes, and writes run
// artifacts to cfg.output_dir. Config and input errors throw io::ConfigError
// or io::ParseError; solver outcomes land in exit_code.
RunOutcome run_register(const io::RunConfig& cfg, const std::string& config_src_path = "");

struct MarkerOutcome {
  std::vector<std::string> names;
  std::vector<markers::MarkerSet> sets;
};

// Re-flows the saved controls of a finished run and rewrites each
// final_{name}.vtk with tangent/volume/normal jacobian fields attached.
// Records without faces get the volume field only.
MarkerOutcome run_markers(const std::string& rundir);

}  // namespace msh::driver
