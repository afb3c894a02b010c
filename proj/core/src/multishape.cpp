#include "msh/multishape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace msh::multishape {

namespace {

void check_dims(const MultiShapeProblem& p, const MultiControl& ctrl) {
  const int n = p.shape_count();
  if (static_cast<int>(ctrl.alphas.size()) != n)
    throw std::invalid_argument("multishape: control has wrong shape count");
  if (static_cast<int>(ctrl.beta.size()) != p.steps)
    throw std::invalid_argument("multishape: background control has wrong timestep count");
  for (int k = 0; k < n; ++k) {
    if (static_cast<int>(ctrl.alphas[k].size()) != p.steps)
      throw std::invalid_argument("multishape: shape control has wrong timestep count");
    for (const Points& a : ctrl.alphas[k])
      if (a.rows() != p.complex.shapes[k].vertex_count())
        throw std::invalid_argument("multishape: shape control has wrong vertex count");
  }
  for (const Points& b : ctrl.beta)
    if (b.rows() != p.background_count())
      throw std::invalid_argument("multishape: background control has wrong vertex count");
  if (static_cast<int>(p.shape_kernels.size()) != n)
    throw std::invalid_argument("multishape: kernel list does not match shape count");
}

const dataterm::DataTerm* term_or_null(
    const std::vector<std::shared_ptr<const dataterm::DataTerm>>& terms, int k) {
  if (k >= static_cast<int>(terms.size())) return nullptr;
  return terms[k].get();
}

// Everything one objective/gradient evaluation reuses across passes.
struct SlidingStep {
  Eigen::VectorXd gamma_raw;  // Gamma per face (before multipliers)
  Points theta;               // m x 3: sum over incident faces of gamma_f * Ntilde_f
  Points S;                   // per face: sum over its vertices of u_k - u_n
  Points Ntilde;              // per face: area-weighted normal from z positions
};

struct Workspace {
  MultiShapeState state;
  std::vector<std::vector<Eigen::MatrixXd>> Gk;   // [k][t] shape Gram
  std::vector<Eigen::MatrixXd> Gn;                // [t] background Gram
  std::vector<std::vector<Eigen::MatrixXd>> Kzx;  // [k][t] gram(z_k, x_k), sliding only
  std::vector<SlidingStep> sliding;               // [t], sliding only
};

Workspace run_forward(const MultiShapeProblem& p, const MultiControl& ctrl) {
  check_dims(p, ctrl);
  const int n = p.shape_count();
  const int T = p.steps;
  const double dt = 1.0 / T;

  Workspace w;
  w.state.x.resize(n);
  w.Gk.resize(n);
  for (int k = 0; k < n; ++k) {
    w.state.x[k].resize(T + 1);
    w.state.x[k][0] = p.complex.shapes[k].vertices;
    w.Gk[k].resize(T);
  }
  w.state.z.resize(T + 1);
  w.state.z[0] = geom::background_mesh(p.complex).vertices;
  w.Gn.resize(T);

  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < n; ++k) {
      w.Gk[k][t] = kernel::gram(p.shape_kernels[k], w.state.x[k][t]);
      w.state.x[k][t + 1] = w.state.x[k][t] + dt * (w.Gk[k][t] * ctrl.alphas[k][t]);
      flow::detail::check_finite(w.state.x[k][t + 1], t + 1);
    }
    w.Gn[t] = kernel::gram(p.background_kernel, w.state.z[t]);
    w.state.z[t + 1] = w.state.z[t] + dt * (w.Gn[t] * ctrl.beta[t]);
    flow::detail::check_finite(w.state.z[t + 1], t + 1);
  }

  if (p.mode == Mode::sliding) {
    w.Kzx.resize(n);
    for (int k = 0; k < n; ++k) w.Kzx[k].resize(T);
    w.sliding.resize(T);
    const int m = p.background_count();
    for (int t = 0; t < T; ++t) {
      SlidingStep& st = w.sliding[t];
      st.gamma_raw.resize(p.total_faces());
      st.theta = Points::Zero(m, 3);
      st.S.resize(p.total_faces(), 3);
      st.Ntilde.resize(p.total_faces(), 3);
      Points un = w.Gn[t] * ctrl.beta[t];  // background field at all z points
      int face_base = 0;
      for (int k = 0; k < n; ++k) {
        const int off = p.complex.offsets[k];
        const int mk = p.complex.shapes[k].vertex_count();
        auto zk = w.state.z[t].middleRows(off, mk);
        w.Kzx[k][t] = kernel::gram(p.shape_kernels[k], Points(zk), w.state.x[k][t]);
        Points ukz = w.Kzx[k][t] * ctrl.alphas[k][t];  // shape-k field at its z copy
        const auto& faces = p.complex.shapes[k].faces;
        for (size_t f = 0; f < faces.size(); ++f) {
          const Face& fc = faces[f];
          Vec3 za = zk.row(fc[0]), zb = zk.row(fc[1]), zc = zk.row(fc[2]);
          Vec3 nrm = (zb - za).cross(zc - za);
          Vec3 S = Vec3::Zero();
          for (int v : fc) S += Vec3(ukz.row(v)) - Vec3(un.row(off + v));
          st.Ntilde.row(face_base + static_cast<int>(f)) = nrm;
          st.S.row(face_base + static_cast<int>(f)) = S;
          st.gamma_raw[face_base + static_cast<int>(f)] = nrm.dot(S);
        }
        face_base += static_cast<int>(faces.size());
      }
    }
  }
  return w;
}

void fill_theta(const MultiShapeProblem& p, SlidingStep& st, const Eigen::VectorXd& lambda_t,
                double mu) {
  st.theta.setZero();
  int face_base = 0;
  for (int k = 0; k < p.shape_count(); ++k) {
    const int off = p.complex.offsets[k];
    const auto& faces = p.complex.shapes[k].faces;
    for (size_t f = 0; f < faces.size(); ++f) {
      int fi = face_base + static_cast<int>(f);
      double gamma = lambda_t[fi] - mu * st.gamma_raw[fi];
      for (int v : faces[f]) st.theta.row(off + v) += gamma * st.Ntilde.row(fi);
    }
    face_base += static_cast<int>(faces.size());
  }
}

}  // namespace

int MultiShapeProblem::total_faces() const {
  int total = 0;
  for (const auto& s : complex.shapes) total += s.face_count();
  return total;
}

MultiControl zero_control(const MultiShapeProblem& p) {
  MultiControl c;
  c.alphas.resize(p.shape_count());
  for (int k = 0; k < p.shape_count(); ++k)
    c.alphas[k] = flow::zero_control(p.steps, p.complex.shapes[k].vertex_count());
  c.beta = flow::zero_control(p.steps, p.background_count());
  return c;
}

ALState zero_al(const MultiShapeProblem& p, double mu0) {
  ALState al;
  al.mu = mu0;
  if (p.mode == Mode::identity) {
    al.lambda.assign(p.steps + 1, Eigen::VectorXd::Zero(3 * p.background_count()));
  } else if (p.mode == Mode::sliding) {
    al.lambda.assign(p.steps, Eigen::VectorXd::Zero(p.total_faces()));
  }
  return al;
}

MultiShapeState forward(const MultiShapeProblem& p, const MultiControl& ctrl) {
  return run_forward(p, ctrl).state;
}

std::vector<Eigen::VectorXd> identity_residual(const MultiShapeProblem& p,
                                               const MultiShapeState& state) {
  const int T = static_cast<int>(state.z.size()) - 1;
  std::vector<Eigen::VectorXd> res(T + 1);
  for (int t = 0; t <= T; ++t) {
    res[t].resize(3 * p.background_count());
    for (int k = 0; k < p.shape_count(); ++k) {
      const int off = p.complex.offsets[k];
      const int mk = p.complex.shapes[k].vertex_count();
      Points diff = state.x[k][t] - state.z[t].middleRows(off, mk);
      res[t].segment(3 * off, 3 * mk) = Eigen::Map<const Eigen::VectorXd>(diff.data(), 3 * mk);
    }
  }
  return res;
}

std::vector<Eigen::VectorXd> sliding_residual(const MultiShapeProblem& p,
                                              const MultiShapeState& state,
                                              const MultiControl& ctrl) {
  // Recompute through the shared forward pass so callers cannot hand in a
  // state inconsistent with the controls.
  (void)state;
  MultiShapeProblem ps = p;
  ps.mode = Mode::sliding;
  Workspace w = run_forward(ps, ctrl);
  std::vector<Eigen::VectorXd> res(p.steps);
  for (int t = 0; t < p.steps; ++t) res[t] = w.sliding[t].gamma_raw;
  return res;
}

std::vector<Eigen::VectorXd> residual(const MultiShapeProblem& p, const MultiShapeState& state,
                                      const MultiControl& ctrl) {
  switch (p.mode) {
    case Mode::identity:
      return identity_residual(p, state);
    case Mode::sliding:
      return sliding_residual(p, state, ctrl);
    case Mode::none:
      return {};
  }
  return {};
}

double constraint_inf_norm(const std::vector<Eigen::VectorXd>& res) {
  double norm = 0.0;
  for (const auto& r : res)
    if (r.size() > 0) norm = std::max(norm, r.cwiseAbs().maxCoeff());
  return norm;
}

EvalResult al_eval(const MultiShapeProblem& p, const MultiControl& ctrl, const ALState& al,
                   bool want_grad) {
  const int n = p.shape_count();
  const int T = p.steps;
  const double dt = 1.0 / T;
  const double mu = al.mu;

  Workspace w = run_forward(p, ctrl);
  EvalResult out;

  // Kinetic energy.
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < n; ++k) {
      out.value += 0.5 * dt *
                   (ctrl.alphas[k][t].transpose() * (w.Gk[k][t] * ctrl.alphas[k][t])).trace();
    }
    out.value += 0.5 * dt * (ctrl.beta[t].transpose() * (w.Gn[t] * ctrl.beta[t])).trace();
  }

  // Endpoint costs.
  for (int k = 0; k < n; ++k) {
    if (const auto* U = term_or_null(p.shape_terms, k)) out.value += U->cost(w.state.x[k][T]);
    if (const auto* Ub = term_or_null(p.background_terms, k)) {
      const int off = p.complex.offsets[k];
      const int mk = p.complex.shapes[k].vertex_count();
      out.value += Ub->cost(Points(w.state.z[T].middleRows(off, mk)));
    }
  }

  // Constraint terms.
  std::vector<Eigen::VectorXd> identity_res;
  if (p.mode == Mode::identity) {
    identity_res = identity_residual(p, w.state);
    for (int t = 1; t <= T; ++t) {
      out.value += dt * (-al.lambda[t].dot(identity_res[t]) +
                         0.5 * mu * identity_res[t].squaredNorm());
    }
    out.constraint_inf = constraint_inf_norm(identity_res);
  } else if (p.mode == Mode::sliding) {
    for (int t = 0; t < T; ++t) {
      const Eigen::VectorXd& g = w.sliding[t].gamma_raw;
      out.value += dt * (-al.lambda[t].dot(g) + 0.5 * mu * g.squaredNorm());
      fill_theta(p, w.sliding[t], al.lambda[t], mu);
      if (g.size() > 0)
        out.constraint_inf = std::max(out.constraint_inf, g.cwiseAbs().maxCoeff());
    }
  }

  if (!want_grad) return out;

  // Backward sweep. xbar/zbar accumulate d(objective)/d(position) at the
  // timestep currently being visited, i.e. -p in the co-state convention.
  out.grad_kernel = zero_control(p);
  out.grad_hilbert = zero_control(p);

  std::vector<Points> xbar(n);
  for (int k = 0; k < n; ++k) {
    xbar[k] = (term_or_null(p.shape_terms, k) != nullptr)
                  ? Points(p.shape_terms[k]->gradient(w.state.x[k][T]))
                  : Points(Points::Zero(p.complex.shapes[k].vertex_count(), 3));
  }
  Points zbar = Points::Zero(p.background_count(), 3);
  for (int k = 0; k < n; ++k) {
    if (const auto* Ub = term_or_null(p.background_terms, k)) {
      const int off = p.complex.offsets[k];
      const int mk = p.complex.shapes[k].vertex_count();
      zbar.middleRows(off, mk) = Ub->gradient(Points(w.state.z[T].middleRows(off, mk)));
    }
  }

  auto add_identity_force = [&](int t) {
    // d/dx of dt(-lambda.C + mu/2 |C|^2) = dt(mu C - lambda); opposite on z.
    for (int k = 0; k < n; ++k) {
      const int off = p.complex.offsets[k];
      const int mk = p.complex.shapes[k].vertex_count();
      Eigen::Map<const Points> lam(al.lambda[t].data() + 3 * off, mk, 3);
      Eigen::Map<const Points> C(identity_res[t].data() + 3 * off, mk, 3);
      xbar[k] += dt * (mu * C - lam);
      zbar.middleRows(off, mk) -= dt * (mu * C - lam);
    }
  };

  if (p.mode == Mode::identity) add_identity_force(T);

  for (int t = T - 1; t >= 0; --t) {
    // Control gradients use the pullback of everything downstream of t.
    for (int k = 0; k < n; ++k) {
      Points sum = ctrl.alphas[k][t] + xbar[k];
      out.grad_kernel.alphas[k][t] = dt * (w.Gk[k][t] * sum);
      out.grad_hilbert.alphas[k][t] = dt * sum;
    }
    Points bsum = ctrl.beta[t] + zbar;
    out.grad_kernel.beta[t] = dt * (w.Gn[t] * bsum);
    out.grad_hilbert.beta[t] = dt * bsum;

    if (p.mode == Mode::sliding) {
      const SlidingStep& st = w.sliding[t];
      for (int k = 0; k < n; ++k) {
        const int off = p.complex.offsets[k];
        const int mk = p.complex.shapes[k].vertex_count();
        Points theta_k = st.theta.middleRows(off, mk);
        Points force = w.Kzx[k][t].transpose() * theta_k;  // K(x_k, z_k) theta_k
        out.grad_kernel.alphas[k][t] -= dt * force;
        out.grad_hilbert.alphas[k][t] -=
            dt * Points(kernel::solve_gram(w.Gk[k][t], force, "multishape: hilbert gradient"));
      }
      out.grad_kernel.beta[t] += dt * (w.Gn[t] * st.theta);
      out.grad_hilbert.beta[t] += dt * st.theta;
    }

    if (t == 0) break;  // positions at t = 0 are fixed data

    // Transport through the Euler step t -> t+1 and add the position forces
    // of timestep t itself.
    for (int k = 0; k < n; ++k) {
      xbar[k] =
          flow::detail::pullback_step(p.shape_kernels[k], w.state.x[k][t], ctrl.alphas[k][t],
                                      xbar[k], dt);
    }
    zbar = flow::detail::pullback_step(p.background_kernel, w.state.z[t], ctrl.beta[t], zbar, dt);

    if (p.mode == Mode::identity) {
      add_identity_force(t);
    } else if (p.mode == Mode::sliding) {
      const SlidingStep& st = w.sliding[t];
      for (int k = 0; k < n; ++k) {
        const int off = p.complex.offsets[k];
        const int mk = p.complex.shapes[k].vertex_count();
        auto zk = w.state.z[t].middleRows(off, mk);
        Points theta_k = st.theta.middleRows(off, mk);

        // Through the shape field's source points x.
        Points xforce = Points::Zero(mk, 3);
        kernel::add_grad1_contraction(p.shape_kernels[k], w.state.x[k][t], Points(zk),
                                      ctrl.alphas[k][t], theta_k, -dt, xforce);
        xbar[k] += xforce;

        // Through the evaluation points z_j, j on the face.
        Points zforce = Points::Zero(mk, 3);
        kernel::add_grad1_contraction(p.shape_kernels[k], Points(zk), w.state.x[k][t], theta_k,
                                      ctrl.alphas[k][t], -dt, zforce);
        kernel::add_grad1_contraction(p.background_kernel, Points(zk), w.state.z[t], theta_k,
                                      ctrl.beta[t], dt, zforce);
        zbar.middleRows(off, mk) += zforce;

        // Through the normals: vertices of each face move its Ntilde.
        const auto& faces = p.complex.shapes[k].faces;
        int face_base = 0;
        for (int kk = 0; kk < k; ++kk) face_base += p.complex.shapes[kk].face_count();
        for (size_t f = 0; f < faces.size(); ++f) {
          int fi = face_base + static_cast<int>(f);
          double gamma = al.lambda[t][fi] - mu * st.gamma_raw[fi];
          Vec3 S = st.S.row(fi);
          const Face& fc = faces[f];
          for (int c = 0; c < 3; ++c) {
            Vec3 e_opp = Vec3(zk.row(fc[(c + 2) % 3])) - Vec3(zk.row(fc[(c + 1) % 3]));
            zbar.row(off + fc[c]) += dt * gamma * e_opp.cross(S).transpose();
          }
        }
      }
      // Through the background field's source points z (all of them).
      Points zsrc = Points::Zero(p.background_count(), 3);
      kernel::add_grad1_contraction(p.background_kernel, w.state.z[t], w.state.z[t],
                                    ctrl.beta[t], st.theta, dt, zsrc);
      zbar += zsrc;
    }
  }

  return out;
}

double al_objective(const MultiShapeProblem& p, const MultiControl& ctrl, const ALState& al) {
  return al_eval(p, ctrl, al, false).value;
}

MultiControl al_gradient(const MultiShapeProblem& p, const MultiControl& ctrl, const ALState& al,
                         flow::GradMode mode) {
  EvalResult r = al_eval(p, ctrl, al, true);
  return mode == flow::GradMode::kernel ? std::move(r.grad_kernel) : std::move(r.grad_hilbert);
}

ALState al_update(const ALState& al, const std::vector<Eigen::VectorXd>& res,
                  double decrease_required, double rho_mu) {
  if (res.size() != al.lambda.size())
    throw std::invalid_argument("al_update: residual and multiplier timestep counts differ");
  ALState next = al;
  for (size_t t = 0; t < res.size(); ++t) {
    if (res[t].size() != al.lambda[t].size())
      throw std::invalid_argument("al_update: residual block size mismatch at timestep " +
                                  std::to_string(t));
    next.lambda[t] = al.lambda[t] - al.mu * res[t];
  }
  double norm = constraint_inf_norm(res);
  if (!al.history.empty() && norm > decrease_required * al.history.back()) {
    next.mu = al.mu * rho_mu;
  }
  next.history.push_back(norm);
  return next;
}

int control_dim(const MultiShapeProblem& p) {
  int dim = 0;
  for (int k = 0; k < p.shape_count(); ++k)
    dim += 3 * p.steps * p.complex.shapes[k].vertex_count();
  dim += 3 * p.steps * p.background_count();
  return dim;
}

Eigen::VectorXd pack(const MultiShapeProblem& p, const MultiControl& ctrl) {
  Eigen::VectorXd v(control_dim(p));
  Eigen::Index pos = 0;
  auto put = [&](const flow::ControlTrajectory& traj) {
    for (const Points& a : traj) {
      v.segment(pos, 3 * a.rows()) = Eigen::Map<const Eigen::VectorXd>(a.data(), 3 * a.rows());
      pos += 3 * a.rows();
    }
  };
  for (const auto& a : ctrl.alphas) put(a);
  put(ctrl.beta);
  return v;
}

MultiControl unpack(const MultiShapeProblem& p, const Eigen::VectorXd& v) {
  if (v.size() != control_dim(p))
    throw std::invalid_argument("multishape::unpack: wrong control vector length");
  MultiControl ctrl = zero_control(p);
  Eigen::Index pos = 0;
  auto get = [&](flow::ControlTrajectory& traj, int m) {
    for (Points& a : traj) {
      a = Eigen::Map<const Points>(v.data() + pos, m, 3);
      pos += 3 * m;
    }
  };
  for (int k = 0; k < p.shape_count(); ++k)
    get(ctrl.alphas[k], p.complex.shapes[k].vertex_count());
  get(ctrl.beta, p.background_count());
  return ctrl;
}

double geometry_scale(const MultiShapeProblem& p) {
  return bbox_diagonal(geom::background_mesh(p.complex).vertices);
}

double constraint_scale(const MultiShapeProblem& p) {
  const double diag = geometry_scale(p);
  switch (p.mode) {
    case Mode::identity:
      return diag;
    case Mode::sliding:
      // Gamma carries units of area times velocity; take the bounding-box
      // diagonal per unit time as the velocity scale.
      return diag * diag * diag;
    case Mode::none:
      return 1.0;
  }
  return 1.0;
}

}  // namespace msh::multishape
