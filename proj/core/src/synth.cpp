#include "msh/synth.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>

namespace msh::synth {

namespace {

geom::TriMesh unit_icosahedron() {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  geom::TriMesh mesh;
  mesh.vertices.resize(12, 3);
  const double raw[12][3] = {{-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0},
                             {0, -1, t}, {0, 1, t},   {0, -1, -t}, {0, 1, -t},
                             {t, 0, -1}, {t, 0, 1},   {-t, 0, -1}, {-t, 0, 1}};
  for (int i = 0; i < 12; ++i) {
    Vec3 v(raw[i][0], raw[i][1], raw[i][2]);
    mesh.vertices.row(i) = v.normalized();
  }
  mesh.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  return mesh;
}

geom::TriMesh subdivide_projected(const geom::TriMesh& mesh) {
  geom::TriMesh out;
  std::vector<Vec3> verts;
  verts.reserve(mesh.vertex_count() * 4);
  for (int i = 0; i < mesh.vertex_count(); ++i) verts.emplace_back(mesh.vertices.row(i));

  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    Vec3 m = (verts[a] + verts[b]).normalized();
    verts.push_back(m);
    int idx = static_cast<int>(verts.size()) - 1;
    midpoint.emplace(key, idx);
    return idx;
  };

  for (const Face& f : mesh.faces) {
    int a = mid(f[0], f[1]), b = mid(f[1], f[2]), c = mid(f[2], f[0]);
    out.faces.push_back({f[0], a, c});
    out.faces.push_back({f[1], b, a});
    out.faces.push_back({f[2], c, b});
    out.faces.push_back({a, b, c});
  }
  out.vertices.resize(static_cast<int>(verts.size()), 3);
  for (size_t i = 0; i < verts.size(); ++i) out.vertices.row(static_cast<int>(i)) = verts[i];
  return out;
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  Vec3 ab = b - a, ac = c - a, ap = p - a;
  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  Vec3 bp = p - b;
  double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
  Vec3 cp = p - c;
  double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
  double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

double min_vertex_to_mesh(const geom::TriMesh& verts_of, const geom::TriMesh& faces_of) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < verts_of.vertex_count(); ++i) {
    Vec3 p = verts_of.vertices.row(i);
    for (const Face& f : faces_of.faces) {
      Vec3 q = closest_point_on_triangle(p, Vec3(faces_of.vertices.row(f[0])),
                                         Vec3(faces_of.vertices.row(f[1])),
                                         Vec3(faces_of.vertices.row(f[2])));
      best = std::min(best, (p - q).norm());
    }
  }
  return best;
}

}  // namespace

geom::TriMesh icosphere(int level, double radius, const Vec3& center) {
  if (level < 0 || level > 6)
    throw std::invalid_argument("icosphere: level must be between 0 and 6");
  geom::TriMesh mesh = unit_icosahedron();
  for (int l = 0; l < level; ++l) mesh = subdivide_projected(mesh);
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    mesh.vertices.row(i) = (radius * Vec3(mesh.vertices.row(i)) + center).transpose();
  }
  return mesh;
}

TwoBalls two_balls(const TwoBallsParams& params) {
  const double r = params.radius;
  if (r <= 0.0) throw std::invalid_argument("two_balls: radius must be positive");
  const Vec3 center_a = Vec3::Zero();
  const Vec3 center_b(params.separation, 0.0, 0.0);

  TwoBalls out;
  out.template_a = icosphere(params.level, r, center_a);
  out.template_b = icosphere(params.level, r, center_b);

  // Ball B target: dent the side facing A, squash along x, stretch along z.
  const double dent_depth = 0.4, dent_width = 0.8;
  const Vec3 toward_a(-1.0, 0.0, 0.0);
  const Vec3 squash(0.9, 1.0, 1.2);
  out.target_b = out.template_b;
  for (int i = 0; i < out.target_b.vertex_count(); ++i) {
    Vec3 u = (Vec3(out.template_b.vertices.row(i)) - center_b) / r;
    double angle = std::acos(std::clamp(u.dot(toward_a), -1.0, 1.0));
    double w = std::exp(-(angle / dent_width) * (angle / dent_width));
    Vec3 local = r * (1.0 - dent_depth * w) * u;
    out.target_b.vertices.row(i) = (center_b + local.cwiseProduct(squash)).transpose();
  }

  // Ball A target: sphere grown until it reaches params.overlap * r past the
  // closest approach of B's target (a 0.05 r margin keeps overlap 0 disjoint).
  double closest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < out.target_b.vertex_count(); ++i)
    closest = std::min(closest, Vec3(out.target_b.vertices.row(i)).norm());
  const double radius_a = closest - 0.05 * r + params.overlap * r;
  out.target_a = icosphere(params.level, radius_a, center_a);
  return out;
}

double surface_distance(const geom::TriMesh& a, const geom::TriMesh& b) {
  return std::min(min_vertex_to_mesh(a, b), min_vertex_to_mesh(b, a));
}

geom::TriMesh tetrahedron(double scale, const Vec3& center) {
  geom::TriMesh mesh;
  mesh.vertices.resize(4, 3);
  const double raw[4][3] = {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
  for (int i = 0; i < 4; ++i) {
    mesh.vertices.row(i) =
        (center + scale * Vec3(raw[i][0], raw[i][1], raw[i][2])).transpose();
  }
  mesh.faces = {{0, 1, 2}, {0, 2, 3}, {0, 3, 1}, {1, 3, 2}};
  return mesh;
}

}  // namespace msh::synth
