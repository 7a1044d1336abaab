#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "liftpose/matrix.hpp"
#include "liftpose/pose.hpp"
#include "liftpose/schema.hpp"

namespace liftpose {

/// One line of a dataset file. Coordinates are in `units`, rows in schema order.
struct PoseRecord {
  std::string id;
  std::optional<std::string> action;
  std::optional<std::string> camera;
  std::string units = "mm";
  Matrix keypoints2d;                 ///< N x 2
  std::optional<Matrix> keypoints3d;  ///< N x 3
};

/// Reads the line-delimited record format (docs/FORMATS.md). Joints are
/// reordered to the schema. Errors name the line number and the offending
/// joint. When `expected_units` is empty, the first record fixes the units.
std::vector<PoseRecord> ingest(const std::filesystem::path& path, const Schema& schema,
                               const std::optional<std::string>& expected_units = std::nullopt);
std::vector<PoseRecord> ingest(std::istream& in, const Schema& schema,
                               const std::optional<std::string>& expected_units = std::nullopt,
                               const std::string& source = "<stream>");

std::string to_record_line(const PoseRecord& record, const Schema& schema);
/// A non-empty `comment` is written first as a `# ` line (skipped by ingest).
void write_records(const std::filesystem::path& path, const std::vector<PoseRecord>& records,
                   const Schema& schema, const std::string& comment = "");
void write_records(std::ostream& out, const std::vector<PoseRecord>& records, const Schema& schema,
                   const std::string& comment = "");

/// Normalized batch of poses, one pose per row.
///
/// `x`/`y` hold root-centered, max-normalized 2D coordinates (B x N) and
/// `scale` the per-pose normalizing factor. When ground truth is present,
/// `gt` is B x 3N laid out as [x_0..x_N-1, y_0..y_N-1, z_0..z_N-1] in the
/// record's units, root-centered at the 3D hip midpoint.
struct PoseSet {
  Matrix x;
  Matrix y;
  Vector scale;
  Matrix gt;
  std::vector<std::string> ids;
  std::vector<std::string> actions;

  std::size_t size() const { return static_cast<std::size_t>(x.rows()); }
  int joints() const { return static_cast<int>(x.cols()); }
  bool has_ground_truth() const { return gt.size() > 0; }
  Pose2D pose(std::size_t i) const;
  /// N x 3 ground truth of pose i.
  Matrix ground_truth(std::size_t i) const;
  PoseSet subset(const std::vector<std::size_t>& rows) const;
};

struct PrepareReport {
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

/// Root-centers and max-normalizes every record; degenerate poses are skipped
/// and reported.
PoseSet prepare(const std::vector<PoseRecord>& records, const Schema& schema,
                PrepareReport* report = nullptr);

}  // namespace liftpose
