#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace liftpose {

inline constexpr int kNumJoints = 16;
inline constexpr int kSchemaVersion = 1;

enum class PartitionId { LegTorso, FiveLimbs };

std::string_view to_string(PartitionId id);
PartitionId parse_partition(std::string_view name);

struct Segment {
  std::string name;
  std::vector<int> joints;  ///< schema indices, ascending

  bool operator==(const Segment&) const = default;
};

/// Named joints, hip indices, and the two segment partitions.
///
/// Loading validates that each partition is disjoint and covers every joint,
/// and that each of the five limb groups has 3 or 4 members.
class Schema {
 public:
  /// The built-in 16-joint layout (see data/schema_16.txt).
  static Schema default_schema();
  static Schema parse(const std::string& text);
  static Schema load(const std::filesystem::path& path);
  std::string to_text() const;

  int size() const { return static_cast<int>(joints_.size()); }
  const std::vector<std::string>& joints() const { return joints_; }
  const std::string& name(int index) const { return joints_.at(index); }
  /// Throws SchemaError for an unknown joint.
  int index(std::string_view joint) const;
  bool contains(std::string_view joint) const;
  int left_hip() const { return left_hip_; }
  int right_hip() const { return right_hip_; }

  const std::vector<Segment>& partition(PartitionId id) const;
  /// Throws SchemaError for an unknown segment.
  const Segment& segment(PartitionId id, std::string_view name) const;

  bool operator==(const Schema&) const = default;

 private:
  void validate() const;

  std::vector<std::string> joints_;
  int left_hip_ = -1;
  int right_hip_ = -1;
  std::vector<Segment> leg_torso_;
  std::vector<Segment> five_limbs_;
};

}  // namespace liftpose
