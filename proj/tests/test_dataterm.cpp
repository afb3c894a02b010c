#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "msh/dataterm.hpp"
#include "msh/synth.hpp"

using namespace msh;
using tst::random_points;

namespace {

geom::TriMesh unit_right_triangle() {
  geom::TriMesh m;
  m.vertices.resize(3, 3);
  m.vertices << 0, 0, 0, 1, 0, 0, 0, 1, 0;
  m.faces = {Face{0, 1, 2}};
  return m;
}

geom::TriMesh flip(const geom::TriMesh& m) {
  geom::TriMesh out = m;
  for (auto& f : out.faces) std::swap(f[1], f[2]);
  return out;
}

// Unit square in the z = 0 plane, split along either diagonal.
geom::TriMesh square(bool diagonal_02) {
  geom::TriMesh m;
  m.vertices.resize(4, 3);
  m.vertices << 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0;
  if (diagonal_02)
    m.faces = {Face{0, 1, 2}, Face{0, 2, 3}};
  else
    m.faces = {Face{0, 1, 3}, Face{1, 2, 3}};
  return m;
}

}  // namespace

TEST_SUITE("dataterm") {

TEST_CASE("landmark cost and gradient") {
  std::mt19937 gen(21);
  Points q = random_points(gen, 5);
  CHECK(dataterm::landmark_cost(q, q) == 0.0);
  CHECK(dataterm::landmark_grad(q, q).cwiseAbs().maxCoeff() == 0.0);

  Points target = q;
  target(2, 0) += 1.0;
  CHECK(dataterm::landmark_cost(q, target) == doctest::Approx(1.0));
  Points g = dataterm::landmark_grad(q, target);
  CHECK(g(2, 0) == doctest::Approx(-2.0));

  // Direct double-loop oracle.
  Points y = random_points(gen, 5);
  double direct = 0;
  for (int i = 0; i < 5; ++i)
    for (int c = 0; c < 3; ++c) direct += (q(i, c) - y(i, c)) * (q(i, c) - y(i, c));
  CHECK(dataterm::landmark_cost(q, y) == doctest::Approx(direct).epsilon(1e-12));

  auto f = [&](const Eigen::VectorXd& v) {
    Points qq = Eigen::Map<const Points>(v.data(), 5, 3);
    return dataterm::landmark_cost(qq, y);
  };
  Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(q.data(), q.size());
  Eigen::VectorXd fd = tst::fd_grad(f, x0);
  Points gq = dataterm::landmark_grad(q, y);
  Eigen::VectorXd ga = Eigen::Map<const Eigen::VectorXd>(gq.data(), gq.size());
  CHECK(tst::max_rel_err(ga, fd) <= 1e-7);

  CHECK_THROWS(dataterm::landmark_cost(q, random_points(gen, 4)));
}

TEST_CASE("current representation") {
  auto tri = unit_right_triangle();
  auto rep = dataterm::current_of(tri);
  CHECK(Vec3(rep.normals.row(0)).isApprox(Vec3(0, 0, 1)));
  CHECK(Vec3(rep.centers.row(0)).isApprox(Vec3(1.0 / 3, 1.0 / 3, 0)));

  auto sphere = synth::icosphere(1);
  auto srep = dataterm::current_of(sphere);
  CHECK(Vec3(srep.normals.colwise().sum()).norm() <= 1e-12 * srep.normals.cwiseAbs().sum());

  auto flipped = dataterm::current_of(flip(sphere));
  CHECK((flipped.normals + srep.normals).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("current cost closed forms") {
  kernel::KernelSpec chi{0.9};
  auto tri = unit_right_triangle();
  CHECK(dataterm::current_cost(tri, tri, chi) == doctest::Approx(0.0).epsilon(1e-12));

  geom::TriMesh empty;
  empty.vertices.resize(0, 3);
  CHECK(dataterm::current_cost(tri, empty, chi) == doctest::Approx(1.0));  // |N|^2 chi(c,c)

  double self = dataterm::current_cost(tri, empty, chi);
  CHECK(dataterm::current_cost(tri, flip(tri), chi) == doctest::Approx(4 * self));
}

TEST_CASE("current cost is triangulation-robust and nonnegative") {
  kernel::KernelSpec chi{2.0};
  auto sq1 = square(true), sq2 = square(false);
  double self = dataterm::current_cost(sq1, geom::TriMesh{Points(0, 3), {}}, chi);
  double cross = dataterm::current_cost(sq1, sq2, chi);
  CHECK(cross >= 0.0);
  CHECK(cross <= 1e-3 * self);

  std::mt19937 gen(22);
  auto a = tst::random_triangle(gen);
  auto b = tst::random_triangle(gen, 1.0, Vec3(0.5, 0, 0));
  CHECK(dataterm::current_cost(a, b, kernel::KernelSpec{0.8}) >= 0.0);
}

TEST_CASE("current gradient: zero at coincidence, exact against finite differences") {
  kernel::KernelSpec chi{0.7};
  std::mt19937 gen(23);

  auto self = tst::random_triangle(gen);
  CHECK(dataterm::current_grad(self, self, chi).cwiseAbs().maxCoeff() <= 1e-12);

  for (int rep = 0; rep < 8; ++rep) {
    geom::TriMesh q;
    q.vertices = random_points(gen, 5, 1.0);
    q.faces = {Face{0, 1, 2}, Face{2, 3, 4}};
    geom::TriMesh target;
    target.vertices = random_points(gen, 4, 1.0, Vec3(0.3, 0.2, -0.1));
    target.faces = {Face{0, 1, 2}, Face{1, 3, 2}};

    Points g = dataterm::current_grad(q, target, chi);
    auto f = [&](const Eigen::VectorXd& v) {
      geom::TriMesh m = q;
      m.vertices = Eigen::Map<const Points>(v.data(), 5, 3);
      return dataterm::current_cost(m, target, chi);
    };
    Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(q.vertices.data(), q.vertices.size());
    Eigen::VectorXd fd = tst::fd_grad(f, x0);
    Eigen::VectorXd ga = Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
    CHECK(tst::max_rel_err(ga, fd) <= 1e-6);
  }
}

TEST_CASE("translation equivariance of cost and gradient") {
  kernel::KernelSpec chi{0.8};
  std::mt19937 gen(24);
  geom::TriMesh q;
  q.vertices = random_points(gen, 5);
  q.faces = {Face{0, 1, 2}, Face{2, 3, 4}};
  auto target = tst::random_triangle(gen);

  double c0 = dataterm::current_cost(q, target, chi);
  Points g0 = dataterm::current_grad(q, target, chi);

  Vec3 shift(0.7, -1.3, 0.4);
  geom::TriMesh qs = q, ts = target;
  qs.vertices.rowwise() += shift.transpose();
  ts.vertices.rowwise() += shift.transpose();
  CHECK(dataterm::current_cost(qs, ts, chi) == doctest::Approx(c0).epsilon(1e-10));
  CHECK((dataterm::current_grad(qs, ts, chi) - g0).cwiseAbs().maxCoeff() <=
        1e-10 * (1 + g0.cwiseAbs().maxCoeff()));
}

TEST_CASE("endpoint term handles") {
  std::mt19937 gen(25);
  auto q = random_points(gen, 4);
  dataterm::ZeroTerm zero;
  CHECK(zero.cost(q) == 0.0);
  CHECK(zero.gradient(q).cwiseAbs().maxCoeff() == 0.0);

  Points target = random_points(gen, 4);
  dataterm::LandmarkTerm lm(target, 2.5);
  CHECK(lm.cost(q) == doctest::Approx(2.5 * dataterm::landmark_cost(q, target)));
  CHECK((lm.gradient(q) - Points(2.5 * dataterm::landmark_grad(q, target)))
            .cwiseAbs()
            .maxCoeff() <= 1e-14);

  auto mesh = tst::random_triangle(gen);
  auto tgt = tst::random_triangle(gen, 1.0, Vec3(0.4, 0, 0));
  kernel::KernelSpec chi{0.9};
  dataterm::CurrentTerm cur(mesh.faces, tgt, chi, 1.5);
  CHECK(cur.cost(mesh.vertices) ==
        doctest::Approx(1.5 * dataterm::current_cost(mesh, tgt, chi)).epsilon(1e-12));
  CHECK((cur.gradient(mesh.vertices) - Points(1.5 * dataterm::current_grad(mesh, tgt, chi)))
            .cwiseAbs()
            .maxCoeff() <= 1e-14);
}

}  // TEST_SUITE
