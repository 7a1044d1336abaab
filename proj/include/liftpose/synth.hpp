#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "liftpose/dataset.hpp"
#include "liftpose/schema.hpp"

namespace liftpose {

struct AngleRange {
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const AngleRange&) const = default;
};

/// Forward-kinematics generator settings. Lengths in mm, angles in radians.
///
/// Bones: hip_half_width, thigh, shin, pelvis_spine, spine_thorax,
/// thorax_neck, neck_head, shoulder_half_width, upper_arm, forearm.
/// Angles: spine_flex, spine_lateral, spine_twist, neck_flex, hip_flex,
/// hip_abduct, knee_flex, shoulder_flex, shoulder_abduct, elbow_flex.
struct SynthConfig {
  std::map<std::string, double> bones;
  std::map<std::string, AngleRange> angles;
  /// Sampled ranges must lie inside these.
  std::map<std::string, AngleRange> limits;
  std::size_t count = 2000;
  AngleRange azimuth;
  AngleRange elevation;
  std::uint64_t seed = 0;

  /// Average adult proportions and moderate everyday joint ranges.
  static SynthConfig defaults();
  /// Every angle and camera range collapsed to zero.
  SynthConfig rest() const;
  /// Throws ConfigError for missing/unknown names, non-positive bones, or
  /// ranges outside their limits.
  void validate() const;

  bool operator==(const SynthConfig&) const = default;
};

std::string to_json(const SynthConfig& config);
/// Missing keys keep the defaults.
SynthConfig synth_config_from_json(const std::string& json);
SynthConfig load_synth_config(const std::filesystem::path& path);

/// A rigid link of the generated skeleton. `parent` is -1 for the hip midpoint.
struct Bone {
  int parent = -1;
  int child = -1;
  double length = 0.0;
};
std::vector<Bone> skeleton_bones(const SynthConfig& config, const Schema& schema);

/// Poses in a body frame (x to the subject's left, y up, z forward), rooted at
/// the hip midpoint, N x 3.
Matrix forward_kinematics(const SynthConfig& config, const Schema& schema,
                          const std::map<std::string, double>& angles_left,
                          const std::map<std::string, double>& angles_right);

/// Records with camera-frame 3D ground truth (mm) and its orthographic 2D
/// projection. Deterministic per seed.
std::vector<PoseRecord> synthesize(const SynthConfig& config, const Schema& schema);

}  // namespace liftpose
