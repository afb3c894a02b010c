#include "msh/geom.hpp"

#include <map>
#include <set>
#include <stdexcept>
#include <utility>

namespace msh::geom {

MultiShapeComplex make_complex(std::vector<TriMesh> shapes) {
  MultiShapeComplex c;
  c.shapes = std::move(shapes);
  c.offsets.resize(c.shapes.size());
  int total = 0;
  for (size_t k = 0; k < c.shapes.size(); ++k) {
    c.offsets[k] = total;
    total += c.shapes[k].vertex_count();
  }
  c.total = total;
  return c;
}

TriMesh background_mesh(const MultiShapeComplex& complex) {
  TriMesh bg;
  bg.vertices.resize(complex.total, 3);
  for (int k = 0; k < complex.shape_count(); ++k) {
    const TriMesh& s = complex.shapes[k];
    bg.vertices.middleRows(complex.offsets[k], s.vertex_count()) = s.vertices;
    for (const Face& f : s.faces) {
      bg.faces.push_back({f[0] + complex.offsets[k], f[1] + complex.offsets[k],
                          f[2] + complex.offsets[k]});
    }
  }
  return bg;
}

NormalCenter face_normal_center(const Points& vertices, const Face& face) {
  Vec3 a = vertices.row(face[0]);
  Vec3 b = vertices.row(face[1]);
  Vec3 c = vertices.row(face[2]);
  NormalCenter out;
  out.n_weighted = (b - a).cross(c - a);
  out.center = (a + b + c) / 3.0;
  return out;
}

NormalCenter face_normal_center(const TriMesh& mesh, int face) {
  if (face < 0 || face >= mesh.face_count())
    throw std::out_of_range("face_normal_center: face index " + std::to_string(face));
  return face_normal_center(mesh.vertices, mesh.faces[face]);
}

FacetFrame facet_frame(const TriMesh& mesh, int face, int vertex) {
  if (face < 0 || face >= mesh.face_count())
    throw std::out_of_range("facet_frame: face index " + std::to_string(face));
  const Face& f = mesh.faces[face];
  int pos = -1;
  for (int i = 0; i < 3; ++i)
    if (f[i] == vertex) pos = i;
  if (pos < 0)
    throw std::invalid_argument("facet_frame: vertex " + std::to_string(vertex) +
                                " not on face " + std::to_string(face));
  Vec3 qj = mesh.vertices.row(f[pos]);
  Vec3 q1 = mesh.vertices.row(f[(pos + 1) % 3]);
  Vec3 q2 = mesh.vertices.row(f[(pos + 2) % 3]);
  FacetFrame out;
  out.e1 = q1 - qj;
  out.e2 = q2 - qj;
  out.e_opp = q2 - q1;
  out.n_weighted = out.e1.cross(out.e2);
  return out;
}

double face_area(const Points& vertices, const Face& face) {
  return 0.5 * face_normal_center(vertices, face).n_weighted.norm();
}

double enclosed_volume(const Points& vertices, const std::vector<Face>& faces) {
  double vol = 0.0;
  for (const Face& f : faces) {
    Vec3 a = vertices.row(f[0]);
    Vec3 b = vertices.row(f[1]);
    Vec3 c = vertices.row(f[2]);
    vol += a.dot(b.cross(c));
  }
  return vol / 6.0;
}

std::vector<std::vector<int>> vertex_face_incidence(const TriMesh& mesh) {
  std::vector<std::vector<int>> inc(mesh.vertex_count());
  for (int fi = 0; fi < mesh.face_count(); ++fi)
    for (int v : mesh.faces[fi]) inc[v].push_back(fi);
  return inc;
}

std::vector<Diagnostic> validate(const TriMesh& mesh) {
  std::vector<Diagnostic> out;
  const int m = mesh.vertex_count();

  std::vector<bool> degenerate(mesh.faces.size(), false);
  for (int fi = 0; fi < mesh.face_count(); ++fi) {
    const Face& f = mesh.faces[fi];
    bool bad = false;
    for (int v : f)
      if (v < 0 || v >= m) bad = true;
    if (bad) {
      out.push_back({DiagnosticKind::bad_index, fi,
                     "face " + std::to_string(fi) + " has an out-of-range vertex index"});
      degenerate[fi] = true;  // keep it out of the edge bookkeeping too
      continue;
    }
    // A repeated index makes the triangle geometrically degenerate, same as
    // zero area from coincident coordinates.
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2] ||
        face_area(mesh.vertices, f) == 0.0) {
      degenerate[fi] = true;
      out.push_back({DiagnosticKind::degenerate_face, fi,
                     "face " + std::to_string(fi) + " has zero area"});
    }
  }
  for (const auto& d : out)
    if (d.kind == DiagnosticKind::bad_index) return out;  // indices unusable below

  // Directed-edge multiset: a consistently oriented manifold surface uses each
  // directed edge at most once and each undirected edge at most twice.
  std::map<std::pair<int, int>, int> directed;
  std::map<std::pair<int, int>, int> undirected;
  for (size_t fi = 0; fi < mesh.faces.size(); ++fi) {
    if (degenerate[fi]) continue;
    const Face& f = mesh.faces[fi];
    for (int i = 0; i < 3; ++i) {
      int a = f[i], b = f[(i + 1) % 3];
      directed[{a, b}]++;
      undirected[{std::min(a, b), std::max(a, b)}]++;
    }
  }
  std::set<std::pair<int, int>> reported;
  for (const auto& [e, cnt] : undirected) {
    if (cnt > 2) {
      out.push_back({DiagnosticKind::non_manifold_edge, e.first,
                     "edge (" + std::to_string(e.first) + "," + std::to_string(e.second) +
                         ") belongs to " + std::to_string(cnt) + " faces"});
      reported.insert(e);
    }
  }
  for (const auto& [e, cnt] : directed) {
    auto ue = std::make_pair(std::min(e.first, e.second), std::max(e.first, e.second));
    if (cnt > 1 && !reported.count(ue)) {
      out.push_back({DiagnosticKind::orientation_mismatch, e.first,
                     "directed edge (" + std::to_string(e.first) + "," +
                         std::to_string(e.second) + ") traversed " + std::to_string(cnt) +
                         " times; adjacent faces disagree on orientation"});
      reported.insert(ue);
    }
  }

  std::map<std::array<double, 3>, int> seen;
  for (int v = 0; v < m; ++v) {
    std::array<double, 3> key = {mesh.vertices(v, 0), mesh.vertices(v, 1), mesh.vertices(v, 2)};
    auto [it, inserted] = seen.emplace(key, v);
    if (!inserted) {
      out.push_back({DiagnosticKind::duplicate_points, v,
                     "vertex " + std::to_string(v) + " coincides with vertex " +
                         std::to_string(it->second)});
    }
  }
  return out;
}

std::vector<Diagnostic> validate(const MultiShapeComplex& complex) {
  std::vector<Diagnostic> out;
  for (const TriMesh& s : complex.shapes) {
    auto d = validate(s);
    out.insert(out.end(), d.begin(), d.end());
  }
  return out;
}

}  // namespace msh::geom
