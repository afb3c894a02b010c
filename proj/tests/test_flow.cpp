#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "msh/flow.hpp"
#include "msh/optim.hpp"

using namespace msh;
using tst::random_points;

namespace {

// Velocity field of time-constant momenta evaluated with kernel contractions;
// shared by the Richardson and co-state consistency checks.
flow::ControlTrajectory constant_control(const Points& a, int steps) {
  return flow::ControlTrajectory(steps, a);
}

}  // namespace

TEST_SUITE("flow") {

TEST_CASE("zero control is the identity flow") {
  std::mt19937 gen(31);
  kernel::KernelSpec k{0.8};
  Points q0 = random_points(gen, 6);
  auto traj = flow::shoot(k, q0, flow::zero_control(7, 6));
  CHECK(traj.size() == 8);
  for (const auto& x : traj) CHECK((x - q0).cwiseAbs().maxCoeff() == 0.0);

  dataterm::ZeroTerm zero;
  CHECK(flow::reduced_cost(k, q0, flow::zero_control(7, 6), zero) == 0.0);
  auto g = flow::adjoint_grad(k, q0, flow::zero_control(7, 6), zero, flow::GradMode::kernel);
  for (const auto& gt : g) CHECK(gt.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single landmark integrates its own momentum exactly") {
  kernel::KernelSpec k{1.0};
  Points q0(1, 3);
  q0 << 0.25, 0.5, -1.0;  // dyadic data keeps every Euler step exact
  Points a(1, 3);
  a << 0.5, 0.25, 2.0;
  auto traj = flow::shoot(k, q0, constant_control(a, 8));
  CHECK(Points(traj.back()) == Points(q0 + a));

  dataterm::ZeroTerm zero;
  CHECK(flow::reduced_cost(k, q0, constant_control(a, 8), zero) ==
        doctest::Approx(0.5 * a.squaredNorm()).epsilon(1e-14));
  CHECK(flow::hamiltonian(k, q0, a) == doctest::Approx(0.5 * a.squaredNorm()));
  CHECK(flow::hamiltonian(k, q0, Points::Zero(1, 3)) == 0.0);
}

TEST_CASE("far-separated landmarks decouple") {
  kernel::KernelSpec k{1.0};
  Points q0(2, 3);
  q0 << 0, 0, 0, 20, 0, 0;  // 20 sigma apart
  Points a(2, 3);
  a << 0.3, -0.2, 0.5, -0.4, 0.1, 0.2;
  auto joint = flow::shoot(k, q0, constant_control(a, 10));
  auto alone0 = flow::shoot(k, q0.topRows(1), constant_control(a.topRows(1), 10));
  auto alone1 = flow::shoot(k, q0.bottomRows(1), constant_control(a.bottomRows(1), 10));
  double dev = std::max((joint.back().row(0) - alone0.back().row(0)).norm(),
                        (joint.back().row(1) - alone1.back().row(0)).norm());
  CHECK(dev <= 1e-80);
}

TEST_CASE("kinetic energy equals the direct double loop") {
  std::mt19937 gen(32);
  kernel::KernelSpec k{0.9};
  Points q0 = random_points(gen, 5);
  auto alpha = tst::random_control(gen, 6, 5);
  dataterm::ZeroTerm zero;
  double cost = flow::reduced_cost(k, q0, alpha, zero);

  auto traj = flow::shoot(k, q0, alpha);
  double direct = 0.0;
  const double dt = 1.0 / 6;
  for (int t = 0; t < 6; ++t)
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j)
        direct += 0.5 * dt * alpha[t].row(i).dot(alpha[t].row(j)) *
                  kernel::eval(k, Vec3(traj[t].row(i)), Vec3(traj[t].row(j)));
  CHECK(cost == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("adjoint gradient matches finite differences") {
  std::mt19937 gen(33);
  kernel::KernelSpec k{1.1};
  for (int rep = 0; rep < 5; ++rep) {
    int n = 3 + rep;
    int steps = 5 + rep;
    Points q0 = random_points(gen, n);
    Points target = q0 + random_points(gen, n, 0.4);
    dataterm::LandmarkTerm term(target, 1.0);
    auto alpha = tst::random_control(gen, steps, n);

    auto fk = flow::adjoint_grad(k, q0, alpha, term, flow::GradMode::kernel);
    auto f = [&](const Eigen::VectorXd& v) {
      return flow::reduced_cost(k, q0, tst::unflatten(v, steps, n), term);
    };
    Eigen::VectorXd fd = tst::fd_grad(f, tst::flatten(alpha));
    CHECK(tst::max_rel_err(tst::flatten(fk), fd) <= 1e-6);

    // Hilbert and kernel forms differ by the per-timestep Gram factor.
    auto fh = flow::adjoint_grad(k, q0, alpha, term, flow::GradMode::hilbert);
    auto traj = flow::shoot(k, q0, alpha);
    double worst = 0;
    for (int t = 0; t < steps; ++t) {
      Points back = kernel::gram(k, traj[t]) * fh[t];
      worst = std::max(worst, (back - fk[t]).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("an optimized two-landmark match reaches its gradient tolerance") {
  kernel::KernelSpec k{1.0};
  Points q0(2, 3);
  q0 << 0, 0, 0, 1.5, 0, 0;
  Points target = q0;
  target(0, 1) += 0.4;
  target(1, 1) -= 0.3;
  auto term = std::make_shared<dataterm::LandmarkTerm>(target, 4.0);

  const int steps = 10;
  class Obj final : public optim::Objective {
   public:
    Obj(kernel::KernelSpec k, Points q0, int steps, std::shared_ptr<const dataterm::DataTerm> u)
        : k_(k), q0_(std::move(q0)), steps_(steps), u_(std::move(u)) {}
    double eval(const Eigen::VectorXd& x, Eigen::VectorXd* g,
                Eigen::VectorXd* pg) const override {
      auto alpha = tst::unflatten(x, steps_, static_cast<int>(q0_.rows()));
      double f = flow::reduced_cost(k_, q0_, alpha, *u_);
      if (g) *g = tst::flatten(flow::adjoint_grad(k_, q0_, alpha, *u_, flow::GradMode::kernel));
      if (pg)
        *pg = tst::flatten(flow::adjoint_grad(k_, q0_, alpha, *u_, flow::GradMode::hilbert));
      return f;
    }
    kernel::KernelSpec k_;
    Points q0_;
    int steps_;
    std::shared_ptr<const dataterm::DataTerm> u_;
  } obj(k, q0, steps, term);

  optim::NlcgConfig cfg;
  cfg.max_iters = 500;
  cfg.grad_tol = 1e-6;
  auto res = optim::nlcg_minimize(obj, Eigen::VectorXd::Zero(2 * 3 * steps), cfg);
  REQUIRE(res.status == optim::NlcgStatus::converged);
  CHECK(res.grad_norm <= 1e-6 * res.initial_grad_norm);

  // Along the optimized flow the per-step kinetic energy is nearly constant.
  auto alpha = tst::unflatten(res.x, steps, 2);
  auto traj = flow::shoot(k, q0, alpha);
  double hmin = 1e300, hmax = -1e300, hsum = 0;
  for (int t = 0; t < steps; ++t) {
    double h = flow::hamiltonian(k, traj[t], alpha[t]);
    hmin = std::min(hmin, h);
    hmax = std::max(hmax, h);
    hsum += h;
  }
  CHECK(hmax - hmin <= 5e-2 * (hsum / steps));
}

TEST_CASE("halving the step size halves the endpoint error") {
  std::mt19937 gen(34);
  kernel::KernelSpec k{1.0};
  Points q0 = random_points(gen, 4);
  Points a = random_points(gen, 4, 0.5);

  auto endpoint = [&](int steps) {
    return flow::shoot(k, q0, constant_control(a, steps)).back();
  };
  Points ref = endpoint(512);
  double e32 = (endpoint(32) - ref).cwiseAbs().maxCoeff();
  double e64 = (endpoint(64) - ref).cwiseAbs().maxCoeff();
  // First-order consistency: the exact ratio against the 512-step reference
  // is (1/32 - 1/512)/(1/64 - 1/512) = 15/7.
  CHECK(e32 / e64 >= 1.7);
  CHECK(e32 / e64 <= 2.3);
}

TEST_CASE("backward transport is consistent with the continuous co-state equation") {
  std::mt19937 gen(35);
  kernel::KernelSpec k{1.0};
  const int steps = 512;
  const double dt = 1.0 / steps;
  const int n = 4;
  Points q0 = random_points(gen, n);
  Points target = q0 + random_points(gen, n, 0.4);
  dataterm::LandmarkTerm term(target, 1.0);
  Points a = random_points(gen, n, 0.5);
  auto alpha = constant_control(a, steps);

  // Reconstruct the transported endpoint sensitivity from the Hilbert
  // gradient: g_h[t] = dt (alpha[t] + xbar[t+1]).
  auto gh = flow::adjoint_grad(k, q0, alpha, term, flow::GradMode::hilbert);
  auto traj = flow::shoot(k, q0, alpha);
  std::vector<Points> xbar(steps + 1);
  for (int t = 0; t < steps; ++t) xbar[t + 1] = gh[t] / dt - alpha[t];

  // Independent backward Euler solve of the continuous equation
  //   dp/dt = grad1 contractions (p, a) + (a, p) - (a, a)
  // sampled at the *next* state, so the two discretizations differ at O(dt).
  std::vector<Points> p(steps + 1);
  p[steps] = -term.gradient(traj[steps]);
  for (int t = steps - 1; t >= 1; --t) {
    Points rhs = Points::Zero(n, 3);
    kernel::add_grad1_contraction(k, traj[t + 1], traj[t + 1], p[t + 1], a, 1.0, rhs);
    kernel::add_grad1_contraction(k, traj[t + 1], traj[t + 1], a, p[t + 1], 1.0, rhs);
    kernel::add_grad1_contraction(k, traj[t + 1], traj[t + 1], a, a, -1.0, rhs);
    p[t] = p[t + 1] + dt * rhs;
  }

  double scale = 0, err = 0;
  for (int t = 1; t <= steps; ++t) {
    scale = std::max(scale, p[t].cwiseAbs().maxCoeff());
    err = std::max(err, (xbar[t] + p[t]).cwiseAbs().maxCoeff());
  }
  CHECK(err <= 1e-2 * scale);
}

TEST_CASE("divergent state reports the first bad timestep") {
  kernel::KernelSpec k{1.0};
  Points q0(1, 3);
  q0 << 0, 0, 0;
  flow::ControlTrajectory alpha(3, Points(1, 3));
  for (auto& t : alpha) t.setZero();
  alpha[1](0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH_AS((void)flow::shoot(k, q0, alpha),
                       doctest::Contains("timestep 2"), std::runtime_error);
}

}  // TEST_SUITE
