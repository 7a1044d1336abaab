#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "liftpose/errors.hpp"
#include "liftpose/geometry.hpp"
#include "liftpose/metrics.hpp"
#include "liftpose/models.hpp"

using namespace liftpose;
using liftpose::testing::random_matrix;
using liftpose::testing::schema16;
using liftpose::testing::synthetic_set;

namespace {

Eigen::Matrix3d random_rotation(Rng& rng) {
  const double a = rng.uniform(-std::numbers::pi, std::numbers::pi);
  const double b = rng.uniform(-std::numbers::pi, std::numbers::pi);
  const double c = rng.uniform(-std::numbers::pi, std::numbers::pi);
  return (Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()) * Eigen::AngleAxisd(b, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(c, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

Matrix similarity(const Matrix& p, const Eigen::Matrix3d& r, double s, const Eigen::RowVector3d& t) {
  return (s * p * r.transpose()).rowwise() + t;
}

double naive_mpjpe(const Matrix& a, const Matrix& b) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    double sq = 0.0;
    for (Eigen::Index j = 0; j < 3; ++j) sq += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(a.rows());
}

double naive_pck(const Matrix& errors, double threshold) {
  double hit = 0.0;
  for (Eigen::Index i = 0; i < errors.rows(); ++i)
    for (Eigen::Index j = 0; j < errors.cols(); ++j) hit += errors(i, j) <= threshold ? 1.0 : 0.0;
  return 100.0 * hit / static_cast<double>(errors.size());
}

double naive_auc(const Matrix& errors) {
  double total = 0.0;
  int n = 0;
  for (double t = 0.0; t <= 150.0 + 1e-9; t += 5.0, ++n) total += naive_pck(errors, t) / 100.0;
  return total / n;
}

}  // namespace

TEST_CASE("upscale") {
  Pose3D p{Matrix::Constant(16, 3, 0.5), 200.0};
  const Pose3D up = upscale(p);
  CHECK(up.coords.isApprox(Matrix::Constant(16, 3, 100.0)));
  CHECK(up.scale == 1.0);
  Pose3D same{Matrix::Constant(16, 3, 0.25), 1.0};
  CHECK(upscale(same).coords == same.coords);
  CHECK_THROWS_AS(upscale(Pose3D{Matrix::Zero(16, 3), 0.0}), ContractError);
  CHECK_THROWS_AS(upscale(Pose3D{Matrix::Zero(16, 3), std::nan("")}), ContractError);

  Rng rng(1);
  const Matrix raw = liftpose::testing::random_raw_pose(rng, 3);
  const Matrix centered = root_center(raw, schema16());
  const Pose2D n = max_normalize(centered);
  CHECK((upscale(Pose3D{n.coords, n.scale}).coords - centered).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("rigid_align recovers similarity transforms exactly") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix gt = random_matrix(rng, 16, 3, -800.0, 800.0);
    const Eigen::Matrix3d r = random_rotation(rng);
    const double s = rng.uniform(0.2, 5.0);
    const Eigen::RowVector3d t(rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3));
    const Matrix pred = similarity(gt, r, s, t);
    CHECK(mpjpe(rigid_align(pred, gt), gt) < 1e-8);
    // Without scale only a rigid copy is recovered exactly.
    CHECK(mpjpe(rigid_align(similarity(gt, r, 1.0, t), gt, false), gt) < 1e-8);
  }
  const Matrix gt = random_matrix(rng, 16, 3);
  CHECK(mpjpe(rigid_align(gt, gt), gt) < 1e-12);
}

TEST_CASE("rigid_align never increases the error and is locally optimal") {
  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const Matrix gt = random_matrix(rng, 16, 3, -500.0, 500.0);
    const Matrix pred = random_matrix(rng, 16, 3, -500.0, 500.0);
    const Matrix aligned = rigid_align(pred, gt);
    const double e = (aligned - gt).squaredNorm();
    CHECK(e <= (pred - gt).squaredNorm() + 1e-9);
    if (trial % 10 == 0) {
      // Nearby similarity transforms of the aligned pose do no better.
      for (int k = 0; k < 5; ++k) {
        const Eigen::Vector3d axis(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        const Eigen::Matrix3d r(Eigen::AngleAxisd(1e-3, axis.normalized()));
        const Eigen::RowVector3d shift(rng.uniform(-1e-2, 1e-2), rng.uniform(-1e-2, 1e-2), rng.uniform(-1e-2, 1e-2));
        const Eigen::RowVector3d mean = aligned.colwise().mean();
        const Matrix centered = aligned.rowwise() - mean;
        const double s = 1.0 + rng.uniform(-1e-3, 1e-3);
        const Matrix moved = similarity(centered, r, s, mean + shift);
        CHECK((moved - gt).squaredNorm() >= e - 1e-7);
      }
    }
  }
}

TEST_CASE("rigid_align excludes reflections and rejects degenerate ground truth") {
  Rng rng(4);
  const Matrix gt = random_matrix(rng, 16, 3);
  Matrix mirrored = gt;
  mirrored.col(2) *= -1.0;
  const Matrix aligned = rigid_align(mirrored, gt);
  CHECK(mpjpe(aligned, gt) > 1e-3);
  Matrix line(16, 3);
  for (int i = 0; i < 16; ++i) line.row(i) = Eigen::RowVector3d(i, 2.0 * i, -i);
  CHECK_THROWS_AS(rigid_align(gt, line), AlignmentError);
  CHECK_THROWS_AS(rigid_align(gt, Matrix::Zero(16, 3)), AlignmentError);
  const Matrix fitted = rigid_align(line, gt);
  CHECK((fitted - gt).squaredNorm() <= (line - gt).squaredNorm());
  const Matrix point = rigid_align(Matrix::Constant(16, 3, 4.0), gt);
  CHECK((point.rowwise() - gt.colwise().mean()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(rigid_align(gt, Matrix::Zero(15, 3)), DimensionError);
}

TEST_CASE("mpjpe") {
  Matrix gt = Matrix::Zero(16, 3);
  CHECK(mpjpe(gt, gt) == 0.0);
  Matrix pred = gt;
  pred.row(7) << 3.0, 4.0, 0.0;
  CHECK(mpjpe(pred, gt) == 0.3125);
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix a = random_matrix(rng, 16, 3, -1e3, 1e3), b = random_matrix(rng, 16, 3, -1e3, 1e3);
    CHECK(std::abs(mpjpe(a, b) - naive_mpjpe(a, b)) < 1e-12);
  }
  CHECK_THROWS_AS(mpjpe(Matrix::Zero(16, 3), Matrix::Zero(16, 2)), DimensionError);
}

TEST_CASE("PCK3D and AUC") {
  const auto grid = default_auc_grid();
  REQUIRE(grid.size() == 31);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == 150.0);

  const PckAuc zero = pck3d_auc(Matrix::Zero(4, 16));
  CHECK(zero.pck == 100.0);
  CHECK(zero.auc == 1.0);
  const PckAuc far = pck3d_auc(Matrix::Constant(4, 16, 151.0));
  CHECK(far.pck == 0.0);
  CHECK(far.auc == 0.0);
  Matrix half = Matrix::Zero(2, 16);
  half.rightCols(8).setConstant(400.0);
  CHECK(pck3d_auc(half).pck == 50.0);

  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix e = random_matrix(rng, 10, 16, 0.0, 250.0);
    const PckAuc r = pck3d_auc(e);
    CHECK(std::abs(r.pck - naive_pck(e, 150.0)) < 1e-12);
    CHECK(std::abs(r.auc - naive_auc(e)) < 1e-12);
    CHECK(r.auc >= 0.0);
    CHECK(r.auc <= 1.0);
    double previous = -1.0;
    for (double t = 0.0; t <= 300.0; t += 7.5) {
      const double p = pck3d_auc(e, t).pck;
      CHECK(p >= previous);
      previous = p;
    }
  }
  CHECK_THROWS_AS(pck3d_auc(Matrix::Zero(1, 16), 150.0, {}), ContractError);
  CHECK_THROWS_AS(pck3d_auc(Matrix(0, 16)), ContractError);
}

TEST_CASE("evaluation is invariant to similarity transforms of the prediction") {
  const PoseSet data = synthetic_set(20, 7);
  Rng rng(7);
  Matrix pred = data.gt + random_matrix(rng, data.gt.rows(), data.gt.cols(), -40.0, 40.0);
  const MetricsReport base = evaluate_predictions(pred, data);
  Matrix moved = pred;
  const int n = data.joints();
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    Matrix p(n, 3);
    for (int c = 0; c < 3; ++c) p.col(c) = pred.row(i).segment(c * n, n).transpose();
    const Matrix q = similarity(p, random_rotation(rng), rng.uniform(0.5, 2.0),
                                Eigen::RowVector3d(rng.uniform(-100, 100), 5.0, -20.0));
    for (int c = 0; c < 3; ++c) moved.row(i).segment(c * n, n) = q.col(c).transpose();
  }
  const MetricsReport after = evaluate_predictions(moved, data);
  CHECK(std::abs(after.mpjpe - base.mpjpe) < 1e-8);
  CHECK(std::abs(after.pck3d - base.pck3d) < 1e-8);

  EvalOptions raw;
  raw.align = false;
  CHECK(evaluate_predictions(moved, data, raw).mpjpe > base.mpjpe + 1.0);
  CHECK(evaluate_predictions(data.gt, data, raw).mpjpe == 0.0);
}

TEST_CASE("report aggregation") {
  const PoseSet data = synthetic_set(40, 8);
  Rng init(8);
  LifterModel m(Representation::Full, schema16(), liftpose::testing::small_arch(), init);
  const MetricsReport r = evaluate(m, data);
  REQUIRE(r.count == 40);
  REQUIRE(r.per_pose.size() == 40);
  double sum = 0.0;
  for (double v : r.per_pose) sum += v;
  CHECK(std::abs(r.mpjpe - sum / 40.0) < 1e-12);
  std::size_t counted = 0;
  for (const auto& [action, n] : r.per_action_count) counted += n;
  CHECK(counted == 40);
  CHECK(r.pck3d >= 0.0);
  CHECK(r.pck3d <= 100.0);

  const std::string csv = report_csv(r, "abc");
  CHECK(csv.rfind("# config_hash=abc\n", 0) == 0);
  CHECK(csv.find("scope,key,poses,mpjpe_mm,pck3d_pct,auc") != std::string::npos);
  CHECK(!format_report(r).empty());

  PoseSet no_gt = data;
  no_gt.gt.resize(0, 0);
  CHECK_THROWS_AS(evaluate(m, no_gt), ContractError);
}
