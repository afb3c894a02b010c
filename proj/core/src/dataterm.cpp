#include "msh/dataterm.hpp"

#include <stdexcept>
#include <utility>

namespace msh::dataterm {

double landmark_cost(const Points& q, const Points& target) {
  if (q.rows() != target.rows())
    throw std::invalid_argument("landmark_cost: point counts differ");
  return (q - target).squaredNorm();
}

Points landmark_grad(const Points& q, const Points& target) {
  if (q.rows() != target.rows())
    throw std::invalid_argument("landmark_grad: point counts differ");
  return 2.0 * (q - target);
}

CurrentRepresentation current_of(const Points& vertices, const std::vector<Face>& faces) {
  CurrentRepresentation rep;
  const int nf = static_cast<int>(faces.size());
  rep.centers.resize(nf, 3);
  rep.normals.resize(nf, 3);
  for (int f = 0; f < nf; ++f) {
    auto nc = geom::face_normal_center(vertices, faces[f]);
    rep.centers.row(f) = nc.center;
    rep.normals.row(f) = nc.n_weighted;
  }
  return rep;
}

CurrentRepresentation current_of(const geom::TriMesh& mesh) {
  return current_of(mesh.vertices, mesh.faces);
}

namespace {

// sum_{f,g} N_f . chi(c_f, c_g) M_g
double pairing(const CurrentRepresentation& a, const CurrentRepresentation& b,
               const kernel::KernelSpec& chi) {
  double total = 0.0;
  for (Eigen::Index f = 0; f < a.centers.rows(); ++f) {
    Vec3 cf = a.centers.row(f);
    Vec3 nf = a.normals.row(f);
    for (Eigen::Index g = 0; g < b.centers.rows(); ++g) {
      total += kernel::radial(chi, (cf - b.centers.row(g).transpose()).squaredNorm()) *
               nf.dot(b.normals.row(g));
    }
  }
  return total;
}

double cost_impl(const CurrentRepresentation& cq, const CurrentRepresentation& tgt,
                 double tgt_self, const kernel::KernelSpec& chi) {
  return pairing(cq, cq, chi) - 2.0 * pairing(cq, tgt, chi) + tgt_self;
}

Points grad_impl(const Points& q, const std::vector<Face>& faces,
                 const CurrentRepresentation& cq, const CurrentRepresentation& tgt,
                 const kernel::KernelSpec& chi) {
  const int nf = static_cast<int>(faces.size());

  // Z(c_f): the mismatch field at the face centers; W_f = (dZ(c_f))^T N_f.
  Points Z(nf, 3), W(nf, 3);
  Z = kernel::gram(chi, cq.centers, cq.centers) * cq.normals -
      kernel::gram(chi, cq.centers, tgt.centers) * tgt.normals;
  W.setZero();
  kernel::add_grad1_contraction(chi, cq.centers, cq.centers, cq.normals, cq.normals, 1.0, W);
  kernel::add_grad1_contraction(chi, cq.centers, tgt.centers, cq.normals, tgt.normals, -1.0, W);

  Points grad(q.rows(), 3);
  grad.setZero();
  for (int f = 0; f < nf; ++f) {
    Vec3 zf = Z.row(f);
    Vec3 wf = W.row(f);
    for (int c = 0; c < 3; ++c) {
      int i = faces[f][c];
      Vec3 e_opp = Vec3(q.row(faces[f][(c + 2) % 3])) - Vec3(q.row(faces[f][(c + 1) % 3]));
      grad.row(i) += ((2.0 / 3.0) * wf + 2.0 * zf.cross(e_opp)).transpose();
    }
  }
  return grad;
}

}  // namespace

double current_cost(const Points& q, const std::vector<Face>& faces,
                    const CurrentRepresentation& target, const kernel::KernelSpec& chi) {
  CurrentRepresentation cq = current_of(q, faces);
  return cost_impl(cq, target, pairing(target, target, chi), chi);
}

double current_cost(const geom::TriMesh& q, const geom::TriMesh& target,
                    const kernel::KernelSpec& chi) {
  return current_cost(q.vertices, q.faces, current_of(target), chi);
}

Points current_grad(const Points& q, const std::vector<Face>& faces,
                    const CurrentRepresentation& target, const kernel::KernelSpec& chi) {
  CurrentRepresentation cq = current_of(q, faces);
  return grad_impl(q, faces, cq, target, chi);
}

Points current_grad(const geom::TriMesh& q, const geom::TriMesh& target,
                    const kernel::KernelSpec& chi) {
  return current_grad(q.vertices, q.faces, current_of(target), chi);
}

double ZeroTerm::cost(const Points&) const { return 0.0; }
Points ZeroTerm::gradient(const Points& q) const { return Points::Zero(q.rows(), 3); }

LandmarkTerm::LandmarkTerm(Points target, double weight)
    : target_(std::move(target)), weight_(weight) {}

double LandmarkTerm::cost(const Points& q) const { return weight_ * landmark_cost(q, target_); }

Points LandmarkTerm::gradient(const Points& q) const {
  return weight_ * landmark_grad(q, target_);
}

CurrentTerm::CurrentTerm(std::vector<Face> faces, const geom::TriMesh& target,
                         kernel::KernelSpec chi, double weight)
    : faces_(std::move(faces)),
      target_(current_of(target)),
      chi_(chi),
      weight_(weight),
      target_self_(pairing(target_, target_, chi_)) {}

double CurrentTerm::cost(const Points& q) const {
  return weight_ * cost_impl(current_of(q, faces_), target_, target_self_, chi_);
}

Points CurrentTerm::gradient(const Points& q) const {
  return weight_ * current_grad(q, faces_, target_, chi_);
}

}  // namespace msh::dataterm
