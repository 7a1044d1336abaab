#include "liftpose/geometry.hpp"

#include <cmath>

#include <Eigen/LU>

#include "liftpose/errors.hpp"

namespace liftpose {

bool is_rotation(const Eigen::Matrix3d& m, double tol) {
  if (!m.allFinite()) return false;
  const double ortho = (m * m.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(m.determinant() - 1.0) <= tol;
}

RotationMatrix RotationMatrix::from_matrix(const Eigen::Matrix3d& m, double tol) {
  if (!is_rotation(m, tol)) throw ContractError("matrix is not a proper rotation");
  return RotationMatrix(m);
}

RotationMatrix RotationMatrix::about_x(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix3d m;
  m << 1, 0, 0,
       0, c, -s,
       0, s, c;
  return RotationMatrix(m);
}

RotationMatrix RotationMatrix::about_y(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix3d m;
  m << c, 0, s,
       0, 1, 0,
       -s, 0, c;
  return RotationMatrix(m);
}

RotationMatrix RotationMatrix::from_angles(double azimuth, double elevation) {
  return RotationMatrix(about_y(azimuth).m_ * about_x(elevation).m_);
}

RotationMatrix RotationMatrix::inverse() const { return RotationMatrix(m_.transpose()); }

RotationSample sample_rotation(Rng& rng) {
  RotationSample s;
  s.azimuth = rng.uniform(-kMaxAzimuth, kMaxAzimuth);
  s.elevation = rng.uniform(-kMaxElevation, kMaxElevation);
  s.rotation = RotationMatrix::from_angles(s.azimuth, s.elevation);
  return s;
}

Pose3D rotate(const Pose3D& pose, const RotationMatrix& r) {
  if (pose.coords.cols() != 3) throw DimensionError("rotate: pose must have 3 columns");
  Pose3D out;
  out.coords = pose.coords * r.matrix().transpose();
  out.scale = pose.scale;
  return out;
}

Pose3D rotate_quarter_turns(const Pose3D& pose, int k) {
  if (pose.coords.cols() != 3) throw DimensionError("rotate: pose must have 3 columns");
  Pose3D out = pose;
  const int turns = ((k % 4) + 4) % 4;
  for (int t = 0; t < turns; ++t) {
    Eigen::VectorXd x = out.coords.col(0);
    out.coords.col(0) = out.coords.col(2);
    out.coords.col(2) = -x;
  }
  return out;
}

Pose2D project(const Pose3D& pose) {
  if (pose.coords.cols() != 3) throw DimensionError("project: pose must have 3 columns");
  return Pose2D{pose.coords.leftCols(2), pose.scale};
}

CycleResult consistency_cycle(const Pose2D& pose, const DepthFn& lifter, const RotationMatrix& r) {
  CycleResult out;
  out.depth = lifter(pose);
  out.reprojected = project(rotate(assemble3d(pose, out.depth), r));
  out.reprojected_depth = lifter(out.reprojected);
  out.recovered =
      project(rotate(assemble3d(out.reprojected, out.reprojected_depth), r.inverse()));
  return out;
}

}  // namespace liftpose
