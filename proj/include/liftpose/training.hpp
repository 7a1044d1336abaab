#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "liftpose/adam.hpp"
#include "liftpose/checkpoint.hpp"
#include "liftpose/dataset.hpp"
#include "liftpose/losses.hpp"
#include "liftpose/models.hpp"
#include "liftpose/rng.hpp"
#include "liftpose/schema.hpp"

namespace liftpose {

struct TrainConfig {
  std::size_t batch_size = 8192;
  double learning_rate = 2e-4;
  int epochs = 800;
  double label_flip = 0.10;
  std::uint64_t seed = 0;
  Representation representation = Representation::Full;
  LossWeights weights;
  ArchitectureConfig architecture = ArchitectureConfig::large();
  /// Re-center and re-normalize reprojected poses before the second lift.
  bool renormalize_reprojection = false;
  /// Keep an epoch_NNNN checkpoint every this many epochs (0 = final only).
  int checkpoint_every = 0;

  /// Full-width settings: batch 8192, lr 2e-4, 800 epochs.
  static TrainConfig large();
  /// Desk-scale profile: batch 256, 200 epochs, lr 1e-3, reduced widths.
  static TrainConfig desk();
  /// Throws ConfigError describing the first invalid field.
  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

/// Named profile ("large" or "desk").
TrainConfig train_profile(const std::string& name);

std::string to_json(const TrainConfig& config);
/// Missing keys keep the values of `base`.
TrainConfig train_config_from_json(const std::string& json, const TrainConfig& base = {});
TrainConfig load_train_config(const std::filesystem::path& path, const TrainConfig& base = {});
/// Hash of the canonical JSON form.
std::string config_hash(const TrainConfig& config);

struct EpochRecord {
  int epoch = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;                 ///< raw adversarial generator loss
  std::vector<double> group_loss;      ///< weighted objective per loss group
  double reprojection = 0.0;           ///< summed over groups
  double ninety = 0.0;                 ///< summed over groups
  std::size_t label_flips = 0;
  std::size_t steps = 0;
  std::optional<double> eval_mpjpe;

  bool operator==(const EpochRecord&) const = default;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::string config_json;
  std::string config_hash;
  std::vector<std::string> group_names;
  std::vector<EpochRecord> epochs;
  std::vector<std::string> checkpoints;
  bool aborted = false;
  std::string abort_reason;

  bool operator==(const RunRecord&) const = default;
};

/// Line-delimited JSON: one header object, then one object per epoch.
std::string run_record_jsonl(const RunRecord& record);
void write_run_record(const std::filesystem::path& path, const RunRecord& record);
RunRecord read_run_record(const std::filesystem::path& path);

struct StepStats {
  double d_loss = 0.0;
  double g_loss = 0.0;
  std::vector<double> group_loss;
  std::vector<double> group_reprojection;
  std::vector<double> group_ninety;
  bool flipped = false;
};

/// Adversarial training state: lifter, discriminator, optimizer moments and
/// random streams. One instance is one deterministic training sequence.
class Trainer {
 public:
  Trainer(const TrainConfig& config, const Schema& schema);
  /// Restores a trainer saved with checkpoint() (bit-exact continuation).
  static Trainer from_checkpoint(const Checkpoint& checkpoint, const Schema& schema);

  /// One discriminator update followed by one generator update.
  StepStats train_step(const Matrix& x, const Matrix& y);
  /// Shuffles, batches and trains over `data`; evaluates on `eval` if given.
  EpochRecord run_epoch(const PoseSet& data, const PoseSet* eval = nullptr);

  const TrainConfig& config() const { return config_; }
  const Schema& schema() const { return schema_; }
  LifterModel& lifter() { return lifter_; }
  const LifterModel& lifter() const { return lifter_; }
  Discriminator& discriminator() { return disc_; }
  const Discriminator& discriminator() const { return disc_; }
  int epoch() const { return epoch_; }

  Checkpoint checkpoint() const;

 private:
  TrainConfig config_;
  Schema schema_;
  Rng init_rng_;
  LifterModel lifter_;
  Discriminator disc_;
  Rng shuffle_rng_;
  Rng rotation_rng_;
  Rng dropout_rng_;
  Rng flip_rng_;
  AdamConfig adam_;
  int epoch_ = 0;
};

/// Rebuilds a lifter from a checkpoint. Throws ConfigError if the checkpoint's
/// representation differs from `expected` (when given).
LifterModel load_lifter(const Checkpoint& checkpoint, const Schema& schema,
                        std::optional<Representation> expected = std::nullopt);

struct TrainResult {
  RunRecord record;
  Trainer trainer;
};

struct TrainOutput {
  /// Directory for run.jsonl and checkpoints; nothing is written when empty.
  std::filesystem::path directory;
};

/// Full training run. A non-finite loss aborts with DivergenceError; when an
/// output directory is set, the record so far and the last good checkpoint
/// (last.ckpt) are on disk and named in the message.
TrainResult train(const PoseSet& data, const TrainConfig& config, const Schema& schema,
                  const PoseSet* eval = nullptr, const TrainOutput& output = {});

}  // namespace liftpose
