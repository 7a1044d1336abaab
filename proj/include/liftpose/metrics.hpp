#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "liftpose/dataset.hpp"
#include "liftpose/matrix.hpp"
#include "liftpose/models.hpp"
#include "liftpose/pose.hpp"

namespace liftpose {

inline constexpr double kPckThresholdMm = 150.0;

/// coords * scale, returned with scale 1 (original units). Throws
/// ContractError for a missing (non-positive or non-finite) scale.
Pose3D upscale(const Pose3D& pred);

/// Similarity (or, without scale, rigid) transform of `pred` onto `gt` that
/// minimizes the summed squared point distances; returns the transformed
/// prediction. Both are N x 3. Reflections are excluded. Throws AlignmentError
/// when the ground truth is rank deficient (collinear or coincident); a
/// degenerate prediction still gets its best fit.
Matrix rigid_align(const Matrix& pred, const Matrix& gt, bool with_scale = true);

/// Per-joint Euclidean distances.
Vector joint_errors(const Matrix& pred, const Matrix& gt);
/// Mean per-joint Euclidean distance.
double mpjpe(const Matrix& pred, const Matrix& gt);

/// Thresholds 0, 5, ..., 150 mm.
std::vector<double> default_auc_grid();

struct PckAuc {
  double pck = 0.0;  ///< percent of joints with error <= threshold
  double auc = 0.0;  ///< mean PCK fraction over the grid, in [0, 1]
};

/// `errors`: poses x joints, in mm.
PckAuc pck3d_auc(const Matrix& errors, double threshold = kPckThresholdMm,
                 const std::vector<double>& grid = default_auc_grid());

struct MetricsReport {
  std::vector<std::string> ids;
  std::vector<std::string> actions;
  std::vector<double> per_pose;  ///< MPJPE per pose (mm)
  double mpjpe = 0.0;            ///< mean of per_pose
  std::map<std::string, double> per_action;
  std::map<std::string, std::size_t> per_action_count;
  double pck3d = 0.0;
  double auc = 0.0;
  std::size_t count = 0;
};

struct EvalOptions {
  bool align = true;
  bool with_scale = true;
  double pck_threshold = kPckThresholdMm;
  std::vector<double> auc_grid = default_auc_grid();
};

/// Lifts every pose of `data`, upscales by its normalizing factor, aligns to
/// the ground truth and aggregates the metrics. Requires ground truth.
MetricsReport evaluate(const LifterModel& lifter, const PoseSet& data,
                       const EvalOptions& options = {});
/// Same, with predictions supplied directly (B x 3N in the PoseSet gt layout,
/// original units).
MetricsReport evaluate_predictions(const Matrix& predictions, const PoseSet& data,
                                   const EvalOptions& options = {});

std::string format_report(const MetricsReport& report);
/// Machine-readable report: a `# config_hash=` comment line, then CSV rows.
void write_report_csv(const std::filesystem::path& path, const MetricsReport& report,
                      const std::string& config_hash);
std::string report_csv(const MetricsReport& report, const std::string& config_hash);

}  // namespace liftpose
