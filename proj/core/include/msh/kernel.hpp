#pragma once

#include <Eigen/Core>

#include <cmath>

#include "msh/types.hpp"

namespace msh::kernel {

// Gaussian radial kernel K(x,y) = exp(-|x-y|^2 / (2 sigma^2)) Id.
struct KernelSpec {
  double sigma = 1.0;
};

inline double radial(const KernelSpec& k, double sq_dist) {
  return std::exp(-sq_dist / (2.0 * k.sigma * k.sigma));
}
// d/ds of the radial profile, s = squared distance.
inline double radial_prime(const KernelSpec& k, double sq_dist) {
  return -radial(k, sq_dist) / (2.0 * k.sigma * k.sigma);
}

double eval(const KernelSpec& k, const Vec3& x, const Vec3& y);

// Gradient in x of n . K(x,y) a  =  2 G'(|x-y|^2) (n.a) (x-y).
Vec3 grad1_dot(const KernelSpec& k, const Vec3& x, const Vec3& y, const Vec3& n, const Vec3& a);

// Scalar Gram matrix G_ij = G(|x_i - y_j|^2); the vector field acts blockwise
// through ordinary matrix products with m x 3 coefficient arrays.
Eigen::MatrixXd gram(const KernelSpec& k, const Points& x, const Points& y);
Eigen::MatrixXd gram(const KernelSpec& k, const Points& x);

// Velocity field of momenta a attached to sources, evaluated at targets.
Points apply(const KernelSpec& k, const Points& targets, const Points& sources, const Points& a);

// Divergence of that field at x: sum_j 2 G'(|x - s_j|^2) (x - s_j) . a_j.
double divergence(const KernelSpec& k, const Vec3& x, const Points& sources, const Points& a);

// Solve K(pts) w = rhs by Cholesky. Near-singular Gram matrices get a jitter
// delta * mean_diag * Id with delta doubling from 1e-12; fails loudly past 1e-6
// or if the solution does not reproduce rhs to 1e-6 relative.
Points solve(const KernelSpec& k, const Points& pts, const Points& rhs);
Eigen::MatrixXd solve(const KernelSpec& k, const Points& pts, const Eigen::MatrixXd& rhs);

// Same jittered Cholesky on an already-assembled Gram matrix.
Eigen::MatrixXd solve_gram(const Eigen::MatrixXd& g, const Eigen::MatrixXd& rhs,
                           const char* what = "kernel::solve");

// out_i += c * sum_j 2 G'(|x_i - y_j|^2) (a_i . b_j) (x_i - y_j)
// All pullback and constraint-force sums in the flow modules contract to this form.
void add_grad1_contraction(const KernelSpec& k, const Points& x, const Points& y,
                           const Points& a, const Points& b, double c, Points& out);

}  // namespace msh::kernel
