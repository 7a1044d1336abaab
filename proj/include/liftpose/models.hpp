#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "liftpose/layers.hpp"
#include "liftpose/pose.hpp"
#include "liftpose/schema.hpp"

namespace liftpose {

/// How the 2D pose is split across lifting networks.
enum class Representation {
  Full,                     ///< one network sees the whole pose
  SplitRecombineLegTorso,   ///< leg/torso feature nets + combiner
  IndependentLegTorso,      ///< leg net and torso net, nothing shared
  SplitRecombineFiveLimbs,  ///< five limb feature nets + combiner
  IndependentFiveLimbs,     ///< five limb nets, nothing shared
};

/// Command-line ids: full, sr-lt, ind-lt, sr-5, ind-5.
std::string_view to_id(Representation rep);
/// Throws ConfigError listing the valid ids.
Representation parse_representation(std::string_view id);
const std::vector<Representation>& all_representations();
bool is_independent(Representation rep);
std::optional<PartitionId> partition_of(Representation rep);

struct ArchitectureConfig {
  int base_width = 1024;    ///< width of the full-pose baseline
  int full_blocks = 6;
  int local_blocks = 2;     ///< per local net in split-recombine variants
  int combiner_blocks = 2;
  int feature_width = 256;  ///< per local net in split-recombine variants
  int disc_width = 1024;
  int disc_blocks = 3;
  double dropout = 0.1;

  /// Full-width architecture.
  static ArchitectureConfig large();
  /// Reduced widths for desk-scale experiments on a laptop CPU.
  static ArchitectureConfig desk();

  bool operator==(const ArchitectureConfig&) const = default;
};

struct SubnetPlan {
  std::string name;
  std::vector<int> joints;  ///< input joints (empty for a combiner)
  MlpSpec spec;
};

struct LifterPlan {
  Representation representation = Representation::Full;
  std::vector<SubnetPlan> locals;
  std::optional<SubnetPlan> combiner;

  std::size_t parameter_count() const;
  int max_path_blocks() const;
};

/// Resolves the sub-network topology and widths for a representation so that
/// its parameter count matches the full-pose baseline as closely as an
/// integer width allows. Independent variants share one width across k nets;
/// split-recombine variants keep the combiner at base width and solve the
/// local width.
LifterPlan plan_lifter(Representation rep, const Schema& schema, const ArchitectureConfig& arch);

/// Sub-networks that share one training objective, and the joints whose
/// ordinates they are responsible for.
struct LossGroup {
  std::string name;
  std::vector<std::size_t> subnets;
  std::vector<int> joints;
};

/// Maps a 2D pose to one depth ordinate per joint.
class LifterModel {
 public:
  LifterModel(Representation rep, const Schema& schema, const ArchitectureConfig& arch, Rng& init);

  Representation representation() const { return plan_.representation; }
  const Schema& schema() const { return schema_; }
  const ArchitectureConfig& architecture() const { return arch_; }
  const LifterPlan& plan() const { return plan_; }

  std::size_t parameter_count() const;
  int max_path_blocks() const { return plan_.max_path_blocks(); }

  std::size_t subnet_count() const { return nets_.size(); }
  ResidualMlp& subnet(std::size_t i) { return nets_.at(i); }
  const ResidualMlp& subnet(std::size_t i) const { return nets_.at(i); }
  /// Local nets first, then the combiner (if any).
  const std::string& subnet_name(std::size_t i) const { return names_.at(i); }

  /// Independent variants: one group per net over its own joints.
  /// Otherwise a single group of all nets over all joints.
  std::vector<LossGroup> loss_groups() const;

  /// x, y: B x N batches. Returns B x N ordinates in schema order.
  Var lift(Tape& tape, Var x, Var y, Mode mode, Rng* dropout_rng, bool track_params = true);
  /// Pure inference on B x N batches.
  Matrix lift(const Matrix& x, const Matrix& y) const;
  Vector lift(const Pose2D& pose) const;

 private:
  template <typename NetFn>
  Var lift_impl(Tape& tape, Var x, Var y, NetFn&& run_net) const;

  Schema schema_;
  ArchitectureConfig arch_;
  LifterPlan plan_;
  std::vector<ResidualMlp> nets_;
  std::vector<std::string> names_;
  std::vector<int> inverse_order_;  ///< independent variants: concat order -> schema order
};

/// Scores a full 2D pose: 3 residual blocks and a linear scalar head.
class Discriminator {
 public:
  Discriminator(const Schema& schema, const ArchitectureConfig& arch, Rng& init);

  /// x, y: B x N. Returns B x 1 unbounded scores. Partial poses are rejected.
  Var score(Tape& tape, Var x, Var y, Mode mode, Rng* dropout_rng, bool track_params = true);
  Matrix score(const Matrix& x, const Matrix& y) const;
  double score(const Pose2D& pose) const;

  ResidualMlp& net() { return net_; }
  const ResidualMlp& net() const { return net_; }
  std::size_t parameter_count() const { return net_.parameter_count(); }

 private:
  int joints_;
  ResidualMlp net_;
};

}  // namespace liftpose
