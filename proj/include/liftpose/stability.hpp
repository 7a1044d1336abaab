#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "liftpose/dataset.hpp"
#include "liftpose/schema.hpp"
#include "liftpose/training.hpp"

namespace liftpose {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  ///< sample standard deviation; NaN with fewer than 2 values
};

/// Inclusive 1-based epoch range.
struct EpochWindow {
  int first = 1;
  int last = 1;
};

/// The last quarter of a run of `epochs` epochs.
EpochWindow last_quarter(int epochs);

struct StabilitySummary {
  std::vector<std::uint64_t> seeds;              ///< completed runs, in input order
  std::vector<std::vector<double>> curves;       ///< per-seed per-epoch eval MPJPE
  std::vector<std::pair<std::uint64_t, std::string>> aborted;
  EpochWindow window;
  MeanStd final_epoch;  ///< across seeds, last epoch
  MeanStd windowed;     ///< per-epoch cross-seed mean and std, averaged over the window
  MeanStd min_epoch;    ///< across seeds, each seed's best epoch
};

MeanStd mean_std(const std::vector<double>& values);

/// Statistics of equally long curves. Throws ContractError for an empty or
/// ragged set or a window outside the run.
StabilitySummary summarize(const std::vector<std::uint64_t>& seeds,
                           const std::vector<std::vector<double>>& curves, EpochWindow window);

struct StabilityOptions {
  /// Defaults to the last quarter of the configured epochs.
  std::optional<EpochWindow> window;
  /// Concurrent training runs (0 = hardware concurrency).
  unsigned jobs = 0;
  /// Per-seed run directories (seed_<n>); nothing is written when empty.
  std::filesystem::path directory;
};

struct StabilityResult {
  StabilitySummary summary;
  std::vector<TrainResult> runs;  ///< completed runs, same order as summary.seeds
};

/// Trains one run per seed (independent random streams, run in parallel) and
/// summarizes the per-epoch eval MPJPE. Aborted runs are excluded and listed.
StabilityResult stability_study(const TrainConfig& config, const std::vector<std::uint64_t>& seeds,
                                const PoseSet& train_set, const PoseSet& eval_set,
                                const Schema& schema, const StabilityOptions& options = {});

/// Long format seed,epoch,mpjpe.
std::string stability_curves_csv(const StabilitySummary& s, const std::string& config_hash);
/// statistic,mean,std,runs,first_epoch,last_epoch.
std::string stability_summary_csv(const StabilitySummary& s, const std::string& config_hash);
std::string format_stability(const StabilitySummary& s);
void write_stability(const std::filesystem::path& directory, const StabilitySummary& s,
                     const std::string& config_hash);

}  // namespace liftpose
