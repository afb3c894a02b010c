#pragma once

#include <string>
#include <vector>

#include "msh/flow.hpp"
#include "msh/geom.hpp"
#include "msh/kernel.hpp"
#include "msh/types.hpp"

namespace msh::markers {

struct ScalarField {
  std::string name;
  bool per_vertex = true;  // otherwise per face
  Eigen::VectorXd values;
};

// Per-face ratio of deformed to undeformed area; the vertex variant averages
// incident faces weighted by undeformed area. Both meshes share connectivity.
struct TangentJacobian {
  ScalarField per_face;
  ScalarField per_vertex;
};
TangentJacobian tangent_jacobian(const geom::TriMesh& undeformed, const Points& deformed);

// exp of the time integral of the velocity divergence along each query
// trajectory; queries[t] are the query positions at timestep t (t = 0..T),
// sources[t]/momenta[t] define the velocity field (t = 0..T-1).
ScalarField volume_jacobian(const kernel::KernelSpec& k, const flow::StateTrajectory& sources,
                            const flow::ControlTrajectory& momenta,
                            const flow::StateTrajectory& queries);

// Volume divided by tangent expansion: the stretch normal to the surface.
ScalarField normal_jacobian(const ScalarField& volume, const ScalarField& tangent_vertex);

// All three markers for a surface carried by its own flow.
struct MarkerSet {
  TangentJacobian tangent;
  ScalarField volume;
  ScalarField normal;
};
MarkerSet surface_markers(const kernel::KernelSpec& k, const geom::TriMesh& undeformed,
                          const flow::StateTrajectory& trajectory,
                          const flow::ControlTrajectory& momenta);

}  // namespace msh::markers
