#include "msh/kernel.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>
#include <string>

namespace msh::kernel {

double eval(const KernelSpec& k, const Vec3& x, const Vec3& y) {
  return radial(k, (x - y).squaredNorm());
}

Vec3 grad1_dot(const KernelSpec& k, const Vec3& x, const Vec3& y, const Vec3& n, const Vec3& a) {
  Vec3 d = x - y;
  return 2.0 * radial_prime(k, d.squaredNorm()) * n.dot(a) * d;
}

Eigen::MatrixXd gram(const KernelSpec& k, const Points& x, const Points& y) {
  const Eigen::Index m = x.rows(), n = y.rows();
  Eigen::MatrixXd g(m, n);
  const double inv = -1.0 / (2.0 * k.sigma * k.sigma);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      g(i, j) = std::exp(inv * (x.row(i) - y.row(j)).squaredNorm());
    }
  }
  return g;
}

Eigen::MatrixXd gram(const KernelSpec& k, const Points& x) { return gram(k, x, x); }

Points apply(const KernelSpec& k, const Points& targets, const Points& sources, const Points& a) {
  if (sources.rows() != a.rows())
    throw std::invalid_argument("kernel::apply: momenta count does not match source count");
  return gram(k, targets, sources) * a;
}

double divergence(const KernelSpec& k, const Vec3& x, const Points& sources, const Points& a) {
  double div = 0.0;
  for (Eigen::Index j = 0; j < sources.rows(); ++j) {
    Vec3 d = x - sources.row(j).transpose();
    div += 2.0 * radial_prime(k, d.squaredNorm()) * d.dot(a.row(j));
  }
  return div;
}

Eigen::MatrixXd solve_gram(const Eigen::MatrixXd& g, const Eigen::MatrixXd& rhs,
                           const char* what) {
  const double mean_diag = g.trace() / static_cast<double>(g.rows());  // = 1 for Gaussian
  const double rhs_norm = rhs.norm();

  double delta = 0.0;
  while (true) {
    Eigen::MatrixXd reg = g;
    if (delta > 0.0) reg.diagonal().array() += delta * mean_diag;
    Eigen::LLT<Eigen::MatrixXd> llt(reg);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd w = llt.solve(rhs);
      double residual = (g * w - rhs).norm();
      if (residual <= 1e-6 * (rhs_norm > 0.0 ? rhs_norm : 1.0) && w.allFinite()) return w;
    }
    delta = (delta == 0.0) ? 1e-12 : 2.0 * delta;
    if (delta > 1e-6) {
      throw std::runtime_error(std::string(what) +
                               ": Gram matrix numerically singular (jitter exhausted at "
                               "relative shift 1e-6); points too close for this kernel width");
    }
  }
}

Eigen::MatrixXd solve(const KernelSpec& k, const Points& pts, const Eigen::MatrixXd& rhs) {
  if (pts.rows() != rhs.rows())
    throw std::invalid_argument("kernel::solve: rhs row count does not match point count");
  return solve_gram(gram(k, pts), rhs);
}

Points solve(const KernelSpec& k, const Points& pts, const Points& rhs) {
  Points out = solve(k, pts, Eigen::MatrixXd(rhs));
  return out;
}

void add_grad1_contraction(const KernelSpec& k, const Points& x, const Points& y,
                           const Points& a, const Points& b, double c, Points& out) {
  const Eigen::Index m = x.rows(), n = y.rows();
  const double inv_two_sigma2 = 1.0 / (2.0 * k.sigma * k.sigma);
  for (Eigen::Index i = 0; i < m; ++i) {
    Vec3 xi = x.row(i);
    Vec3 ai = a.row(i);
    Vec3 acc = Vec3::Zero();
    for (Eigen::Index j = 0; j < n; ++j) {
      Vec3 d = xi - y.row(j).transpose();
      double g = std::exp(-d.squaredNorm() * inv_two_sigma2);
      // 2 G' = -G / sigma^2
      acc += (-2.0 * inv_two_sigma2 * g) * ai.dot(b.row(j)) * d;
    }
    out.row(i) += c * acc.transpose();
  }
}

}  // namespace msh::kernel
