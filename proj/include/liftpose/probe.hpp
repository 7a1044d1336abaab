#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "liftpose/dataset.hpp"
#include "liftpose/models.hpp"
#include "liftpose/schema.hpp"

namespace liftpose {

/// Scale factors -0.95, -0.94, ..., 1.05 (201 steps).
std::vector<double> default_probe_grid();

/// deviation[k][s][o]: change of predicted ordinate o when keypoint k is
/// multiplied by scales[s] (normalized units).
struct SensitivityTensor {
  int keypoints = 0;
  std::vector<double> scales;
  std::vector<double> values;

  SensitivityTensor() = default;
  SensitivityTensor(int keypoints, std::vector<double> scales);

  std::size_t steps() const { return scales.size(); }
  double& at(int keypoint, std::size_t step, int ordinate);
  double at(int keypoint, std::size_t step, int ordinate) const;
};

enum class ProbeAggregation {
  MeanAbsolute,  ///< mean |deviation| over every pose of the dataset
  SinglePose,    ///< signed deviation of one pose
};

struct ProbeOptions {
  std::vector<double> grid = default_probe_grid();
  ProbeAggregation aggregation = ProbeAggregation::MeanAbsolute;
  std::size_t pose_index = 0;           ///< used with SinglePose
  std::optional<std::size_t> max_poses; ///< leading subset of the dataset
};

/// Multiplies one root-relative keypoint at a time by each grid factor, lifts
/// the perturbed poses in inference mode and records the change of every
/// predicted ordinate.
SensitivityTensor probe_correlations(const LifterModel& lifter, const PoseSet& data,
                                     const ProbeOptions& options = {});

/// Largest |deviation| over pairs whose keypoint and ordinate lie in different
/// segments of the partition.
double max_cross_segment(const SensitivityTensor& t, const Schema& schema, PartitionId partition);

/// Long format: keypoint,scale,ordinate,deviation after a `# config_hash=` line.
std::string sensitivity_csv(const SensitivityTensor& t, const Schema& schema,
                            const std::string& config_hash);
/// Writes sensitivity.csv plus curves/<keypoint>.csv (scale column, then one
/// column per ordinate).
void write_sensitivity(const std::filesystem::path& directory, const SensitivityTensor& t,
                       const Schema& schema, const std::string& config_hash);

}  // namespace liftpose
