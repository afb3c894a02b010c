#pragma once

#include <memory>
#include <vector>

#include "msh/geom.hpp"
#include "msh/kernel.hpp"
#include "msh/types.hpp"

namespace msh::dataterm {

// Landmark attachment sum_i |q_i - y_i|^2.
double landmark_cost(const Points& q, const Points& target);
Points landmark_grad(const Points& q, const Points& target);

// A triangulated surface as a measure: one area-weighted normal (|N| = 2 area)
// placed at each face centroid.
struct CurrentRepresentation {
  Points centers;  // F x 3
  Points normals;  // F x 3
};

CurrentRepresentation current_of(const Points& vertices, const std::vector<Face>& faces);
CurrentRepresentation current_of(const geom::TriMesh& mesh);

// Squared RKHS distance |mu_q - mu_target|^2 under the scalar kernel chi,
// expanded as the three double sums over face pairs.
double current_cost(const Points& q, const std::vector<Face>& faces,
                    const CurrentRepresentation& target, const kernel::KernelSpec& chi);
double current_cost(const geom::TriMesh& q, const geom::TriMesh& target,
                    const kernel::KernelSpec& chi);

// Exact gradient of current_cost in the vertex positions q.
Points current_grad(const Points& q, const std::vector<Face>& faces,
                    const CurrentRepresentation& target, const kernel::KernelSpec& chi);
Points current_grad(const geom::TriMesh& q, const geom::TriMesh& target,
                    const kernel::KernelSpec& chi);

// Endpoint cost handle used by the flow modules; gradient is exact for cost.
class DataTerm {
 public:
  virtual ~DataTerm() = default;
  virtual double cost(const Points& q) const = 0;
  virtual Points gradient(const Points& q) const = 0;
};

class ZeroTerm final : public DataTerm {
 public:
  double cost(const Points& q) const override;
  Points gradient(const Points& q) const override;
};

class LandmarkTerm final : public DataTerm {
 public:
  LandmarkTerm(Points target, double weight = 1.0);
  double cost(const Points& q) const override;
  Points gradient(const Points& q) const override;

 private:
  Points target_;
  double weight_;
};

class CurrentTerm final : public DataTerm {
 public:
  // faces: connectivity of the moving shape (fixed along the flow).
  CurrentTerm(std::vector<Face> faces, const geom::TriMesh& target, kernel::KernelSpec chi,
              double weight = 1.0);
  double cost(const Points& q) const override;
  Points gradient(const Points& q) const override;

 private:
  std::vector<Face> faces_;
  CurrentRepresentation target_;
  kernel::KernelSpec chi_;
  double weight_;
  double target_self_;  // pairing of the target with itself, fixed along the flow
};

}  // namespace msh::dataterm
