#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "liftpose/errors.hpp"
#include "liftpose/geometry.hpp"

using namespace liftpose;
using liftpose::testing::random_raw_pose;
using liftpose::testing::schema16;

namespace {

Pose3D random_pose3d(Rng& rng) {
  Pose3D p;
  p.coords = random_raw_pose(rng, 3) / 500.0;
  p.scale = rng.uniform(100.0, 900.0);
  return p;
}

}  // namespace

TEST_CASE("sampled rotations stay in range and are proper") {
  Rng rng(1);
  double az_lo = 10, az_hi = -10, el_lo = 10, el_hi = -10;
  for (int i = 0; i < 100000; ++i) {
    RotationSample s = sample_rotation(rng);
    az_lo = std::min(az_lo, s.azimuth);
    az_hi = std::max(az_hi, s.azimuth);
    el_lo = std::min(el_lo, s.elevation);
    el_hi = std::max(el_hi, s.elevation);
    if (i % 97 == 0) CHECK(is_rotation(s.rotation.matrix()));
  }
  CHECK(az_lo >= -8 * std::numbers::pi / 9);
  CHECK(az_hi <= 8 * std::numbers::pi / 9);
  CHECK(el_lo >= -std::numbers::pi / 18);
  CHECK(el_hi <= std::numbers::pi / 18);
  CHECK(az_hi - az_lo > 0.99 * 16 * std::numbers::pi / 9);
  CHECK(RotationMatrix::from_angles(0, 0).matrix() == Eigen::Matrix3d::Identity());
}

TEST_CASE("rotation construction rejects non-rotations") {
  Eigen::Matrix3d reflect = Eigen::Matrix3d::Identity();
  reflect(0, 0) = -1;
  CHECK_THROWS_AS(RotationMatrix::from_matrix(reflect), ContractError);
  CHECK_THROWS_AS(RotationMatrix::from_matrix(2.0 * Eigen::Matrix3d::Identity()), ContractError);
  CHECK_NOTHROW(RotationMatrix::from_matrix(RotationMatrix::about_y(0.3).matrix()));
}

TEST_CASE("rotate preserves norms and inverts") {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    Pose3D p = random_pose3d(rng);
    RotationMatrix r = sample_rotation(rng).rotation;
    Pose3D q = rotate(p, r);
    CHECK((q.coords.rowwise().norm() - p.coords.rowwise().norm()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((rotate(q, r.inverse()).coords - p.coords).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(q.scale == p.scale);
  }
  Pose3D p = random_pose3d(rng);
  CHECK(rotate(p, RotationMatrix{}).coords == p.coords);
}

TEST_CASE("quarter turns") {
  Rng rng(3);
  Pose3D p = random_pose3d(rng);
  Pose3D cw = rotate_quarter_turns(p, 1);
  CHECK(cw.coords.col(0) == p.coords.col(2));
  CHECK(cw.coords.col(1) == p.coords.col(1));
  CHECK(cw.coords.col(2) == -p.coords.col(0));
  Pose3D via_matrix = rotate(p, RotationMatrix::about_y(std::numbers::pi / 2));
  CHECK((via_matrix.coords - cw.coords).cwiseAbs().maxCoeff() < 1e-15);

  Pose2D proj = project(cw);
  CHECK(proj.coords.col(0) == p.coords.col(2));
  CHECK(proj.coords.col(1) == p.coords.col(1));
  Pose2D acw = project(rotate_quarter_turns(p, -1));
  CHECK(acw.coords.col(0) == -p.coords.col(2));
  Pose2D half = project(rotate_quarter_turns(p, 2));
  CHECK(half.coords.col(0) == -p.coords.col(0));
  CHECK(half.coords.col(1) == p.coords.col(1));
  CHECK(rotate_quarter_turns(p, 4).coords == p.coords);
}

TEST_CASE("projection") {
  const Schema& s = schema16();
  Rng rng(4);
  Pose2D y = normalize_pose(random_raw_pose(rng), s);
  Vector z(16);
  for (int i = 0; i < 16; ++i) z(i) = rng.uniform(-1, 1);
  Pose2D back = project(assemble3d(y, z));
  CHECK(back.coords == y.coords);
  CHECK(back.scale == y.scale);
}

TEST_CASE("consistency cycle with the identity rotation and an oracle") {
  const Schema& s = schema16();
  Rng rng(5);
  Pose2D y = normalize_pose(random_raw_pose(rng), s);
  DepthFn arbitrary = [](const Pose2D& p) { return Vector(p.coords.col(0).array().sin()); };
  CycleResult id = consistency_cycle(y, arbitrary, RotationMatrix{});
  CHECK(id.reprojected.coords == y.coords);
  CHECK((id.recovered.coords - y.coords).cwiseAbs().maxCoeff() < 1e-12);

  // A rigid 3D pose and a lifter that knows it: recovers the original 2D.
  Matrix pose3 = random_raw_pose(rng, 3) / 500.0;
  Pose2D y3{pose3.leftCols(2), 1.0};
  RotationMatrix r = sample_rotation(rng).rotation;
  const Matrix rotated = pose3 * r.matrix().transpose();
  DepthFn oracle = [&](const Pose2D& p) -> Vector {
    if ((p.coords - pose3.leftCols(2)).cwiseAbs().maxCoeff() < 1e-12) return pose3.col(2);
    return rotated.col(2);
  };
  CycleResult c = consistency_cycle(y3, oracle, r);
  CHECK((c.recovered.coords - y3.coords).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((c.reprojected.coords - rotated.leftCols(2)).cwiseAbs().maxCoeff() < 1e-12);
}
