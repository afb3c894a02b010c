#include "msh/driver.hpp"

namespace msh::driver {

MultiShapeAlProblem::MultiShapeAlProblem(const multishape::MultiShapeProblem& p, double mu0)
    : p_(p), al_(multishape::zero_al(p, mu0)) {}

int MultiShapeAlProblem::dim() const { return multishape::control_dim(p_); }

double MultiShapeAlProblem::eval(const Eigen::VectorXd& x, Eigen::VectorXd* grad,
                                 Eigen::VectorXd* pre_grad) {
  auto ctrl = multishape::unpack(p_, x);
  auto r = multishape::al_eval(p_, ctrl, al_, grad != nullptr || pre_grad != nullptr);
  last_constraint_ = r.constraint_inf;
  if (grad) *grad = multishape::pack(p_, r.grad_kernel);
  if (pre_grad) *pre_grad = multishape::pack(p_, r.grad_hilbert);
  return r.value;
}

double MultiShapeAlProblem::constraint_inf_norm(const Eigen::VectorXd& x) {
  auto ctrl = multishape::unpack(p_, x);
  auto state = multishape::forward(p_, ctrl);
  return multishape::constraint_inf_norm(multishape::residual(p_, state, ctrl));
}

void MultiShapeAlProblem::update_multipliers(const Eigen::VectorXd& x, double decrease_required,
                                             double rho_mu) {
  auto ctrl = multishape::unpack(p_, x);
  auto state = multishape::forward(p_, ctrl);
  al_ = multishape::al_update(al_, multishape::residual(p_, state, ctrl), decrease_required,
                              rho_mu);
}

double MultiShapeAlProblem::constraint_scale() const {
  return multishape::constraint_scale(p_);
}

namespace {

using dataterm::DataTerm;

geom::TriMesh load_mesh(const std::string& path) {
  auto ends_with = [&path](const char* suffix) {
    std::string s(suffix);
    return path.size() >= s.size() && path.compare(path.size() - s.size(), s.size(), s) == 0;
  };
  if (ends_with(".off")) return io::read_off(path);
  if (ends_with(".vtk")) return io::read_vtk_polydata(path).mesh;
  throw io::ConfigError("unsupported mesh format (expected .off or .vtk): " + path);
}

void reject_bad_indices(const geom::TriMesh& mesh, const std::string& path) {
  for (const auto& d : geom::validate(mesh))
    if (d.kind == geom::DiagnosticKind::bad_index)
      throw io::ParseError(path + ": " + d.message);
}

// Kernel widths left unset derive from the template geometry: a quarter of
// the joint bounding-box diagonal for the flow kernels, an eighth for the
// current kernel.
void resolve_defaults(io::RunConfig& cfg, const std::vector<geom::TriMesh>& templates) {
  Eigen::Index rows = 0;
  for (const auto& m : templates) rows += m.vertices.rows();
  Points all(rows, 3);
  Eigen::Index at = 0;
  for (const auto& m : templates) {
    all.middleRows(at, m.vertices.rows()) = m.vertices;
    at += m.vertices.rows();
  }
  const double diag = bbox_diagonal(all);
  if (!(diag > 0)) throw io::ConfigError("template meshes span a single point");
  if (cfg.sigma_shapes.empty()) cfg.sigma_shapes.assign(templates.size(), 0.25 * diag);
  if (cfg.sigma_background == 0.0) cfg.sigma_background = 0.25 * diag;
  if (cfg.sigma_data == 0.0) cfg.sigma_data = 0.125 * diag;
}

std::shared_ptr<const DataTerm> make_term(const io::RunConfig& cfg, const geom::TriMesh& tmpl,
                                          const geom::TriMesh& target, double weight,
                                          const std::string& target_path) {
  if (weight == 0.0) return nullptr;
  if (cfg.data_term == "landmark") {
    if (target.vertex_count() != tmpl.vertex_count())
      throw io::ConfigError("landmark target " + target_path + " has " +
                            std::to_string(target.vertex_count()) + " vertices, template has " +
                            std::to_string(tmpl.vertex_count()));
    return std::make_shared<dataterm::LandmarkTerm>(target.vertices, weight);
  }
  if (tmpl.face_count() == 0 || target.face_count() == 0)
    throw io::ConfigError("surface data term needs triangulated meshes (" + target_path + ")");
  return std::make_shared<dataterm::CurrentTerm>(tmpl.faces, target,
                                                 kernel::KernelSpec{cfg.sigma_data}, weight);
}

// Flat t-major layout over one control trajectory.
class FlowObjective final : public optim::Objective {
 public:
  FlowObjective(kernel::KernelSpec k, Points q0, int steps,
                std::shared_ptr<const DataTerm> term)
      : k_(k), q0_(std::move(q0)), steps_(steps), term_(std::move(term)) {}

  flow::ControlTrajectory unflatten(const Eigen::VectorXd& x) const {
    flow::ControlTrajectory alpha(steps_);
    const Eigen::Index block = q0_.size();
    for (int t = 0; t < steps_; ++t)
      alpha[t] = Eigen::Map<const Points>(x.data() + t * block, q0_.rows(), 3);
    return alpha;
  }

  static Eigen::VectorXd flatten(const flow::ControlTrajectory& alpha) {
    const Eigen::Index block = alpha.empty() ? 0 : alpha[0].size();
    Eigen::VectorXd x(block * static_cast<Eigen::Index>(alpha.size()));
    for (size_t t = 0; t < alpha.size(); ++t)
      Eigen::Map<Points>(x.data() + t * block, alpha[t].rows(), 3) = alpha[t];
    return x;
  }

  double eval(const Eigen::VectorXd& x, Eigen::VectorXd* grad,
              Eigen::VectorXd* pre_grad) const override {
    auto alpha = unflatten(x);
    double f = flow::reduced_cost(k_, q0_, alpha, *term_);
    if (grad)
      *grad = flatten(flow::adjoint_grad(k_, q0_, alpha, *term_, flow::GradMode::kernel));
    if (pre_grad)
      *pre_grad = flatten(flow::adjoint_grad(k_, q0_, alpha, *term_, flow::GradMode::hilbert));
    return f;
  }

  int dim() const { return static_cast<int>(q0_.size()) * steps_; }

 private:
  kernel::KernelSpec k_;
  Points q0_;
  int steps_;
  std::shared_ptr<const DataTerm> term_;
};

RunOutcome run_single(const io::RunConfig& cfg, const std::vector<geom::TriMesh>& templates,
                      const std::vector<geom::TriMesh>& targets) {
  auto tmpl_union = geom::background_mesh(geom::make_complex(templates));
  auto target_union = geom::background_mesh(geom::make_complex(targets));
  auto term = make_term(cfg, tmpl_union, target_union, cfg.data_weight, "target union");
  if (!term) term = std::make_shared<dataterm::ZeroTerm>();

  kernel::KernelSpec k{cfg.sigma_background};
  FlowObjective obj(k, tmpl_union.vertices, cfg.time_steps, term);
  auto res = optim::nlcg_minimize(obj, Eigen::VectorXd::Zero(obj.dim()), cfg.nlcg);

  RunOutcome out;
  out.config = cfg;
  out.trace = std::move(res.trace);
  out.objective = res.value;
  out.initial_data_cost = term->cost(tmpl_union.vertices);
  switch (res.status) {
    case optim::NlcgStatus::converged:
    case optim::NlcgStatus::stalled:  // best the arithmetic can do
      break;
    case optim::NlcgStatus::max_iterations:
      out.exit_code = 2;
      out.message = "iteration limit reached";
      break;
    case optim::NlcgStatus::line_search_failed:
      out.exit_code = 2;
      out.message = res.message;
      break;
  }

  io::FlowRecord rec;
  rec.name = "shape0";
  rec.mesh = tmpl_union;
  rec.sigma = k.sigma;
  rec.controls = obj.unflatten(res.x);
  rec.trajectory = flow::shoot(k, tmpl_union.vertices, rec.controls);
  out.data_cost = term->cost(rec.trajectory.back());
  out.flows.push_back(std::move(rec));
  return out;
}

RunOutcome run_multi(const io::RunConfig& cfg, const std::vector<geom::TriMesh>& templates,
                     const std::vector<geom::TriMesh>& targets,
                     const std::vector<std::string>& target_paths) {
  multishape::MultiShapeProblem p;
  p.complex = geom::make_complex(templates);
  for (double s : cfg.sigma_shapes) p.shape_kernels.push_back(kernel::KernelSpec{s});
  p.background_kernel = kernel::KernelSpec{cfg.sigma_background};
  p.steps = cfg.time_steps;
  if (cfg.mode == "multi-identity") p.mode = multishape::Mode::identity;
  else if (cfg.mode == "multi-sliding") p.mode = multishape::Mode::sliding;
  else p.mode = multishape::Mode::none;
  for (size_t k = 0; k < templates.size(); ++k) {
    p.shape_terms.push_back(
        make_term(cfg, templates[k], targets[k], cfg.data_weight, target_paths[k]));
    p.background_terms.push_back(
        make_term(cfg, templates[k], targets[k], cfg.background_data_weight, target_paths[k]));
  }
  if (p.mode == multishape::Mode::sliding && p.total_faces() == 0)
    throw io::ConfigError("sliding mode needs triangulated shapes");

  // Constraints are measured in geometry units (positions, or area times
  // velocity); dividing mu0 by the squared scale makes the initial penalty
  // energy independent of them.
  const double scale = multishape::constraint_scale(p);
  MultiShapeAlProblem alp(p, cfg.al.mu0 / (scale * scale));
  auto res = optim::al_solve(alp, Eigen::VectorXd::Zero(alp.dim()), cfg.al, cfg.nlcg);

  RunOutcome out;
  out.config = cfg;
  out.trace = std::move(res.trace);
  out.objective = res.value;
  out.constraint_inf = res.constraint_inf;
  switch (res.status) {
    case optim::AlStatus::converged:
      break;
    case optim::AlStatus::max_outer:
      out.exit_code = 2;
      out.message = res.message;
      break;
    case optim::AlStatus::line_search_failed:
      out.exit_code = 2;
      out.message = res.message;
      break;
    case optim::AlStatus::infeasible:
      out.exit_code = 3;
      out.message = res.message;
      break;
  }

  out.problem = p;
  out.controls = multishape::unpack(p, res.x);
  out.state = multishape::forward(p, out.controls);
  for (int k = 0; k < p.shape_count(); ++k) {
    if (!p.shape_terms[k]) continue;
    out.data_cost += p.shape_terms[k]->cost(out.state.x[k].back());
    out.initial_data_cost += p.shape_terms[k]->cost(templates[k].vertices);
  }

  for (int k = 0; k < p.shape_count(); ++k) {
    io::FlowRecord rec;
    rec.name = "shape" + std::to_string(k);
    rec.mesh = templates[k];
    rec.sigma = p.shape_kernels[k].sigma;
    rec.trajectory = out.state.x[k];
    rec.controls = out.controls.alphas[k];
    out.flows.push_back(std::move(rec));
  }
  io::FlowRecord bg;
  bg.name = "background";
  bg.mesh = geom::background_mesh(p.complex);
  bg.sigma = p.background_kernel.sigma;
  bg.trajectory = out.state.z;
  bg.controls = out.controls.beta;
  out.flows.push_back(std::move(bg));
  return out;
}

}  // namespace

RunOutcome run_register(const io::RunConfig& cfg_in, const std::string& config_src_path) {
  io::RunConfig cfg = cfg_in;
  std::vector<geom::TriMesh> templates, targets;
  for (const auto& path : cfg.templates) {
    templates.push_back(load_mesh(path));
    reject_bad_indices(templates.back(), path);
  }
  for (const auto& path : cfg.targets) {
    targets.push_back(load_mesh(path));
    reject_bad_indices(targets.back(), path);
  }
  resolve_defaults(cfg, templates);

  RunOutcome out = cfg.mode == "single" ? run_single(cfg, templates, targets)
                                        : run_multi(cfg, templates, targets, cfg.targets);
  io::write_run_artifacts(cfg.output_dir, cfg, config_src_path, out.flows, out.trace);
  return out;
}

MarkerOutcome run_markers(const std::string& rundir) {
  auto art = io::read_run_artifacts(rundir);
  MarkerOutcome out;
  for (const auto& rec : art.flows) {
    std::vector<markers::ScalarField> fields;
    markers::MarkerSet set;
    if (rec.mesh.face_count() > 0) {
      set = markers::surface_markers(kernel::KernelSpec{rec.sigma}, rec.mesh, rec.trajectory,
                                     rec.controls);
      fields = {set.tangent.per_face, set.tangent.per_vertex, set.volume, set.normal};
    } else {
      set.volume = markers::volume_jacobian(kernel::KernelSpec{rec.sigma}, rec.trajectory,
                                            rec.controls, rec.trajectory);
      fields = {set.volume};
    }
    geom::TriMesh final_mesh;
    final_mesh.vertices = rec.trajectory.back();
    final_mesh.faces = rec.mesh.faces;
    io::write_vtk_polydata(rundir + "/final_" + rec.name + ".vtk", final_mesh, fields);
    out.names.push_back(rec.name);
    out.sets.push_back(std::move(set));
  }
  return out;
}

}  // namespace msh::driver
