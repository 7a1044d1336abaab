#pragma once

#include <string_view>

#include "liftpose/matrix.hpp"
#include "liftpose/schema.hpp"

namespace liftpose {

/// Root-centered, max-normalized 2D pose (N x 2). `scale` is the max absolute
/// coordinate of the centered pose in its original units.
struct Pose2D {
  Matrix coords;
  double scale = 1.0;
};

/// N x 3 pose in normalized units; `scale` is inherited from the source Pose2D.
struct Pose3D {
  Matrix coords;
  double scale = 1.0;
};

/// Translates every point so that the hip midpoint sits at the origin.
/// Works for any number of coordinate columns.
Matrix root_center(const Matrix& raw, const Schema& schema);

/// Divides by the maximum absolute coordinate. Throws NormalizationError for an
/// all-zero (or non-finite) pose.
Pose2D max_normalize(const Matrix& centered);

/// coords * scale.
Matrix denormalize(const Pose2D& pose);

/// root_center followed by max_normalize.
Pose2D normalize_pose(const Matrix& raw, const Schema& schema);

/// Checks the Pose2D invariants (shape, root at origin, range, scale > 0).
/// Throws SchemaError / NormalizationError describing the violation.
void validate_pose2d(const Pose2D& pose, const Schema& schema, double tol = 1e-9);

/// Rows of `pose` belonging to the segment, in schema order.
Matrix select_segment(const Matrix& pose, const Schema& schema, PartitionId partition,
                      std::string_view segment);
/// Writes `rows` back into the segment's rows of `pose` (inverse of select_segment).
void scatter_segment(Matrix& pose, const Schema& schema, PartitionId partition,
                     std::string_view segment, const Matrix& rows);

}  // namespace liftpose

namespace liftpose {

/// [x | y | depth] with the scale carried over. Throws DimensionError when the
/// depth length differs from the joint count.
Pose3D assemble3d(const Pose2D& pose, const Vector& depth);

}  // namespace liftpose
