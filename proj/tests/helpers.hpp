#pragma once

#include <functional>
#include <random>

#include <Eigen/Core>

#include "msh/flow.hpp"
#include "msh/geom.hpp"
#include "msh/multishape.hpp"
#include "msh/types.hpp"

namespace tst {

using msh::Face;
using msh::Points;
using msh::Vec3;

inline Points random_points(std::mt19937& gen, int n, double scale = 1.0,
                            const Vec3& center = Vec3::Zero()) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Points p(n, 3);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) p(i, c) = center[c] + u(gen);
  return p;
}

inline Eigen::VectorXd fd_grad(const std::function<double(const Eigen::VectorXd&)>& f,
                               Eigen::VectorXd x, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

// Per-coordinate relative error; coordinates far below the gradient's own
// scale are compared absolutely against that scale instead of their own.
inline double max_rel_err(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
  const double floor = 1e-8 + 1e-3 * want.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < want.size(); ++i)
    worst = std::max(worst, std::abs(got[i] - want[i]) / std::max(std::abs(want[i]), floor));
  return worst;
}

inline Eigen::VectorXd flatten(const msh::flow::ControlTrajectory& a) {
  const Eigen::Index block = a.empty() ? 0 : a[0].size();
  Eigen::VectorXd x(block * static_cast<Eigen::Index>(a.size()));
  for (size_t t = 0; t < a.size(); ++t)
    Eigen::Map<Points>(x.data() + t * block, a[t].rows(), 3) = a[t];
  return x;
}

inline msh::flow::ControlTrajectory unflatten(const Eigen::VectorXd& x, int steps, int pts) {
  msh::flow::ControlTrajectory a(steps);
  const Eigen::Index block = Eigen::Index(pts) * 3;
  for (int t = 0; t < steps; ++t)
    a[t] = Eigen::Map<const Points>(x.data() + t * block, pts, 3);
  return a;
}

inline msh::flow::ControlTrajectory random_control(std::mt19937& gen, int steps, int pts,
                                                   double scale = 0.3) {
  msh::flow::ControlTrajectory a(steps);
  for (auto& t : a) t = random_points(gen, pts, scale);
  return a;
}

inline msh::geom::TriMesh random_triangle(std::mt19937& gen, double scale = 1.0,
                                          const Vec3& center = Vec3::Zero()) {
  msh::geom::TriMesh m;
  m.vertices = random_points(gen, 3, scale, center);
  m.faces = {Face{0, 1, 2}};
  return m;
}

// Small two-shape problem: triangles (sliding needs faces) or point triples,
// shifted apart so nothing coincides.
inline msh::multishape::MultiShapeProblem tiny_problem(std::mt19937& gen,
                                                       msh::multishape::Mode mode, int steps,
                                                       bool with_faces = true,
                                                       bool with_terms = true) {
  namespace ms = msh::multishape;
  std::vector<msh::geom::TriMesh> shapes;
  for (int k = 0; k < 2; ++k) {
    Vec3 center = Vec3(2.5 * k, 0.3 * k, 0);
    auto m = random_triangle(gen, 0.8, center);
    if (!with_faces) m.faces.clear();
    shapes.push_back(std::move(m));
  }
  ms::MultiShapeProblem p;
  p.complex = msh::geom::make_complex(shapes);
  p.shape_kernels = {msh::kernel::KernelSpec{0.9}, msh::kernel::KernelSpec{1.3}};
  p.background_kernel = msh::kernel::KernelSpec{1.1};
  p.steps = steps;
  p.mode = mode;
  p.shape_terms.resize(2);
  p.background_terms.resize(2);
  if (with_terms) {
    for (int k = 0; k < 2; ++k) {
      Points target = shapes[k].vertices + random_points(gen, 3, 0.3);
      p.shape_terms[k] = std::make_shared<msh::dataterm::LandmarkTerm>(target, 1.0);
      p.background_terms[k] = std::make_shared<msh::dataterm::LandmarkTerm>(target, 0.7);
    }
  }
  return p;
}

inline msh::multishape::MultiControl random_multi_control(std::mt19937& gen,
                                                          const msh::multishape::MultiShapeProblem& p,
                                                          double scale = 0.3) {
  msh::multishape::MultiControl c;
  for (int k = 0; k < p.shape_count(); ++k)
    c.alphas.push_back(random_control(gen, p.steps, p.complex.shapes[k].vertex_count(), scale));
  c.beta = random_control(gen, p.steps, p.background_count(), scale);
  return c;
}

inline msh::multishape::ALState random_al_state(std::mt19937& gen,
                                                const msh::multishape::MultiShapeProblem& p,
                                                double lambda_scale = 0.5) {
  auto al = msh::multishape::zero_al(p);
  std::uniform_real_distribution<double> u(-lambda_scale, lambda_scale);
  std::uniform_real_distribution<double> umu(0.5, 2.0);
  // Identity multipliers at t = 0 multiply a residual that is identically
  // zero; keep them zero so tests match the stored convention.
  for (size_t t = 0; t < al.lambda.size(); ++t) {
    if (p.mode == msh::multishape::Mode::identity && t == 0) continue;
    for (Eigen::Index i = 0; i < al.lambda[t].size(); ++i) al.lambda[t][i] = u(gen);
  }
  al.mu = umu(gen);
  return al;
}

}  // namespace tst
