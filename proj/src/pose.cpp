#include "liftpose/pose.hpp"

#include <cmath>

#include "liftpose/errors.hpp"

namespace liftpose {

Matrix root_center(const Matrix& raw, const Schema& schema) {
  if (raw.rows() != schema.size()) {
    throw DimensionError("pose has " + std::to_string(raw.rows()) + " joints, schema has " +
                         std::to_string(schema.size()));
  }
  RowVector root = 0.5 * (raw.row(schema.left_hip()) + raw.row(schema.right_hip()));
  return raw.rowwise() - root;
}

Pose2D max_normalize(const Matrix& centered) {
  if (!centered.allFinite()) throw NormalizationError("pose has non-finite coordinates");
  const double s = centered.size() == 0 ? 0.0 : centered.cwiseAbs().maxCoeff();
  if (!(s > 0.0)) throw NormalizationError("cannot normalize a degenerate all-zero pose");
  return Pose2D{centered / s, s};
}

Matrix denormalize(const Pose2D& pose) { return pose.coords * pose.scale; }

Pose2D normalize_pose(const Matrix& raw, const Schema& schema) {
  return max_normalize(root_center(raw, schema));
}

void validate_pose2d(const Pose2D& pose, const Schema& schema, double tol) {
  if (pose.coords.rows() != schema.size() || pose.coords.cols() != 2) {
    throw DimensionError("Pose2D must be " + std::to_string(schema.size()) + "x2");
  }
  if (!pose.coords.allFinite()) throw NormalizationError("Pose2D has non-finite coordinates");
  if (!(pose.scale > 0.0)) throw NormalizationError("Pose2D scale must be positive");
  RowVector root = 0.5 * (pose.coords.row(schema.left_hip()) + pose.coords.row(schema.right_hip()));
  if (root.cwiseAbs().maxCoeff() > tol) throw NormalizationError("Pose2D root is not at the origin");
  if (pose.coords.cwiseAbs().maxCoeff() > 1.0 + tol) {
    throw NormalizationError("Pose2D coordinates exceed [-1, 1]");
  }
}

Matrix select_segment(const Matrix& pose, const Schema& schema, PartitionId partition,
                      std::string_view segment) {
  if (pose.rows() != schema.size()) throw DimensionError("pose does not match schema");
  const Segment& seg = schema.segment(partition, segment);
  Matrix out(static_cast<Eigen::Index>(seg.joints.size()), pose.cols());
  for (std::size_t i = 0; i < seg.joints.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = pose.row(seg.joints[i]);
  }
  return out;
}

void scatter_segment(Matrix& pose, const Schema& schema, PartitionId partition,
                     std::string_view segment, const Matrix& rows) {
  const Segment& seg = schema.segment(partition, segment);
  if (pose.rows() != schema.size() || rows.rows() != static_cast<Eigen::Index>(seg.joints.size()) ||
      rows.cols() != pose.cols()) {
    throw DimensionError("scatter_segment: shape mismatch for segment '" + seg.name + "'");
  }
  for (std::size_t i = 0; i < seg.joints.size(); ++i) {
    pose.row(seg.joints[i]) = rows.row(static_cast<Eigen::Index>(i));
  }
}

}  // namespace liftpose

namespace liftpose {

Pose3D assemble3d(const Pose2D& pose, const Vector& depth) {
  if (depth.size() != pose.coords.rows() || pose.coords.cols() != 2) {
    throw DimensionError("assemble3d: " + std::to_string(depth.size()) + " ordinates for " +
                         std::to_string(pose.coords.rows()) + " joints");
  }
  Pose3D out;
  out.coords.resize(pose.coords.rows(), 3);
  out.coords.leftCols(2) = pose.coords;
  out.coords.col(2) = depth;
  out.scale = pose.scale;
  return out;
}

}  // namespace liftpose
