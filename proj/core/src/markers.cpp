#include "msh/markers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace msh::markers {

namespace {

void check_positive(const Eigen::VectorXd& v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0) || !std::isfinite(v[i])) {
      throw std::runtime_error(std::string(what) + " not positive at entry " +
                               std::to_string(i) +
                               " (degenerate or folded deformation, value " +
                               std::to_string(v[i]) + ")");
    }
  }
}

}  // namespace

TangentJacobian tangent_jacobian(const geom::TriMesh& undeformed, const Points& deformed) {
  if (deformed.rows() != undeformed.vertices.rows())
    throw std::invalid_argument("tangent_jacobian: vertex counts differ");
  const int nf = undeformed.face_count();
  TangentJacobian out;
  out.per_face.name = "tangent_jacobian";
  out.per_face.per_vertex = false;
  out.per_face.values.resize(nf);

  Eigen::VectorXd area0(nf);
  for (int f = 0; f < nf; ++f) {
    area0[f] = geom::face_area(undeformed.vertices, undeformed.faces[f]);
    double area1 = geom::face_area(deformed, undeformed.faces[f]);
    if (area0[f] == 0.0)
      throw std::runtime_error("tangent_jacobian: undeformed face " + std::to_string(f) +
                               " is degenerate");
    out.per_face.values[f] = area1 / area0[f];
  }
  check_positive(out.per_face.values, "tangent_jacobian");

  out.per_vertex.name = "tangent_jacobian";
  out.per_vertex.per_vertex = true;
  out.per_vertex.values.setZero(undeformed.vertex_count());
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(undeformed.vertex_count());
  for (int f = 0; f < nf; ++f) {
    for (int v : undeformed.faces[f]) {
      out.per_vertex.values[v] += area0[f] * out.per_face.values[f];
      weight[v] += area0[f];
    }
  }
  for (Eigen::Index v = 0; v < weight.size(); ++v) {
    if (weight[v] == 0.0)
      throw std::runtime_error("tangent_jacobian: vertex " + std::to_string(v) +
                               " belongs to no face");
    out.per_vertex.values[v] /= weight[v];
  }
  return out;
}

ScalarField volume_jacobian(const kernel::KernelSpec& k, const flow::StateTrajectory& sources,
                            const flow::ControlTrajectory& momenta,
                            const flow::StateTrajectory& queries) {
  const int T = static_cast<int>(momenta.size());
  if (static_cast<int>(sources.size()) < T || static_cast<int>(queries.size()) != T + 1)
    throw std::invalid_argument("volume_jacobian: trajectory lengths inconsistent");
  const double dt = 1.0 / T;
  const Eigen::Index nq = queries[0].rows();

  ScalarField out;
  out.name = "volume_jacobian";
  out.per_vertex = true;
  out.values.setZero(nq);
  for (int t = 0; t < T; ++t) {
    for (Eigen::Index i = 0; i < nq; ++i) {
      out.values[i] +=
          dt * kernel::divergence(k, Vec3(queries[t].row(i)), sources[t], momenta[t]);
    }
  }
  out.values = out.values.array().exp();
  check_positive(out.values, "volume_jacobian");
  return out;
}

ScalarField normal_jacobian(const ScalarField& volume, const ScalarField& tangent_vertex) {
  if (volume.values.size() != tangent_vertex.values.size())
    throw std::invalid_argument("normal_jacobian: field sizes differ");
  ScalarField out;
  out.name = "normal_jacobian";
  out.per_vertex = true;
  out.values = volume.values.cwiseQuotient(tangent_vertex.values);
  check_positive(out.values, "normal_jacobian");
  return out;
}

MarkerSet surface_markers(const kernel::KernelSpec& k, const geom::TriMesh& undeformed,
                          const flow::StateTrajectory& trajectory,
                          const flow::ControlTrajectory& momenta) {
  MarkerSet out;
  out.tangent = tangent_jacobian(undeformed, trajectory.back());
  out.volume = volume_jacobian(k, trajectory, momenta, trajectory);
  out.normal = normal_jacobian(out.volume, out.tangent.per_vertex);
  return out;
}

}  // namespace msh::markers
