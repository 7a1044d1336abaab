#pragma once

#include <functional>
#include <numbers>

#include <Eigen/Core>

#include "liftpose/pose.hpp"
#include "liftpose/rng.hpp"

namespace liftpose {

inline constexpr double kMaxAzimuth = 8.0 * std::numbers::pi / 9.0;
inline constexpr double kMaxElevation = std::numbers::pi / 18.0;

/// Proper rotation: R R^T = I and det R = 1, both within 1e-9.
class RotationMatrix {
 public:
  RotationMatrix() : m_(Eigen::Matrix3d::Identity()) {}

  /// Throws ContractError if `m` is not a proper rotation within `tol`.
  static RotationMatrix from_matrix(const Eigen::Matrix3d& m, double tol = 1e-9);
  /// R_y(azimuth) * R_x(elevation).
  static RotationMatrix from_angles(double azimuth, double elevation);
  static RotationMatrix about_x(double angle);
  static RotationMatrix about_y(double angle);

  const Eigen::Matrix3d& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }
  RotationMatrix inverse() const;

 private:
  explicit RotationMatrix(const Eigen::Matrix3d& m) : m_(m) {}
  Eigen::Matrix3d m_;
};

bool is_rotation(const Eigen::Matrix3d& m, double tol = 1e-9);

struct RotationSample {
  RotationMatrix rotation;
  double azimuth = 0.0;
  double elevation = 0.0;
};

/// Azimuth uniform in [-8pi/9, 8pi/9], elevation uniform in [-pi/18, pi/18].
RotationSample sample_rotation(Rng& rng);

/// Rotates every point (rows): coords' = coords * R^T.
Pose3D rotate(const Pose3D& pose, const RotationMatrix& r);
/// Exact k * 90 degree rotation about y (clockwise for k > 0):
/// one quarter turn maps (x, y, z) to (z, y, -x).
Pose3D rotate_quarter_turns(const Pose3D& pose, int k);

/// Orthographic projection: drops the depth column. No re-centering or
/// re-normalization; the scale is inherited.
Pose2D project(const Pose3D& pose);

/// Depth predictor for one pose: N ordinates.
using DepthFn = std::function<Vector(const Pose2D&)>;

struct CycleResult {
  Pose2D reprojected;  ///< P R [x, y, z]
  Pose2D recovered;    ///< P R^-1 [lift(reprojected)]
  Vector depth;
  Vector reprojected_depth;
};

/// Lift, rotate, project, lift again, rotate back, project.
CycleResult consistency_cycle(const Pose2D& pose, const DepthFn& lifter, const RotationMatrix& r);

}  // namespace liftpose
