#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <vector>

namespace msh {

using Vec3 = Eigen::Vector3d;
// One point per row. Row-major storage so a [t][vertex][3] dump is a flat memcpy.
using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Face = std::array<int, 3>;

inline double bbox_diagonal(const Points& pts) {
  if (pts.rows() == 0) return 0.0;
  Vec3 lo = pts.colwise().minCoeff();
  Vec3 hi = pts.colwise().maxCoeff();
  return (hi - lo).norm();
}

}  // namespace msh
