#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "liftpose/checkpoint.hpp"
#include "liftpose/dataset.hpp"
#include "liftpose/errors.hpp"
#include "liftpose/metrics.hpp"
#include "liftpose/probe.hpp"
#include "liftpose/stability.hpp"
#include "liftpose/synth.hpp"
#include "liftpose/training.hpp"

namespace liftpose {
namespace {

namespace fs = std::filesystem;

fs::path resolve_out(const fs::path& p) {
  const char* base = std::getenv("LIFTPOSE_OUT_DIR");
  if (base == nullptr || *base == '\0' || p.is_absolute()) return p;
  return fs::path(base) / p;
}

std::vector<double> parse_numbers(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(flag + ": '" + item + "' is not a number");
    }
  }
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("--seeds: '" + item + "' is not a non-negative integer");
    }
    out.push_back(std::stoull(item));
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("failed writing " + path.string());
}

struct CommonOptions {
  std::string schema;
};

Schema load_schema(const CommonOptions& c) {
  return c.schema.empty() ? Schema::default_schema() : Schema::load(c.schema);
}

PoseSet load_pose_set(const std::string& path, const Schema& schema, std::ostream& err) {
  PrepareReport report;
  PoseSet set = prepare(ingest(path, schema), schema, &report);
  for (const auto& w : report.warnings) err << "warning: " << path << ": " << w << "\n";
  if (set.size() == 0) throw ConfigError(path + " holds no usable poses");
  return set;
}

struct TrainFlags {
  std::string profile;
  std::string config;
  std::string rep;
  std::optional<int> epochs;
  std::optional<std::size_t> batch;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
  std::string weights;
  std::string group_weights;
  std::optional<double> label_flip;
  std::optional<int> checkpoint_every;
  bool renormalize = false;

  void attach(CLI::App* app, bool with_seed) {
    auto* prof = app->add_option("--profile", profile, "named settings: desk or large")
                     ->check(CLI::IsMember({"desk", "large"}));
    auto* cfg = app->add_option("--config", config, "JSON training configuration")
                    ->check(CLI::ExistingFile);
    prof->excludes(cfg);
    cfg->excludes(prof);
    app->add_option("--rep", rep, "representation: full, sr-lt, ind-lt, sr-5, ind-5");
    app->add_option("--epochs", epochs, "number of epochs")->check(CLI::PositiveNumber);
    app->add_option("--batch", batch, "batch size")->check(CLI::Range(2, 1 << 30));
    app->add_option("--lr", lr, "Adam learning rate")->check(CLI::PositiveNumber);
    if (with_seed) app->add_option("--seed", seed, "random seed");
    app->add_option("--weights", weights, "w1,w2,w3: adversarial, reprojection, ninety");
    app->add_option("--group-weights", group_weights,
                    "per-network adversarial weights for independent representations");
    app->add_option("--label-flip", label_flip, "discriminator label flip probability");
    app->add_option("--checkpoint-every", checkpoint_every, "keep a checkpoint every N epochs")
        ->check(CLI::NonNegativeNumber);
    app->add_flag("--renormalize", renormalize, "re-normalize reprojected poses");
  }

  TrainConfig resolve() const {
    TrainConfig c = config.empty() ? train_profile(profile.empty() ? "desk" : profile)
                                   : load_train_config(config, TrainConfig::desk());
    if (!rep.empty()) c.representation = parse_representation(rep);
    if (epochs) c.epochs = *epochs;
    if (batch) c.batch_size = *batch;
    if (lr) c.learning_rate = *lr;
    if (seed) c.seed = *seed;
    if (label_flip) c.label_flip = *label_flip;
    if (checkpoint_every) c.checkpoint_every = *checkpoint_every;
    if (renormalize) c.renormalize_reprojection = true;
    if (!weights.empty()) {
      const auto w = parse_numbers(weights, "--weights");
      if (w.size() != 3) throw ConfigError("--weights expects three values w1,w2,w3");
      c.weights.adversarial = w[0];
      c.weights.reprojection = w[1];
      c.weights.ninety = w[2];
    }
    if (!group_weights.empty()) c.weights.group_adversarial = parse_numbers(group_weights, "--group-weights");
    c.validate();
    return c;
  }
};

int cmd_synth(const std::string& config_path, std::optional<std::size_t> count,
              std::optional<std::uint64_t> seed, bool rest, const std::string& out_path,
              const Schema& schema, std::ostream& out, std::ostream& err) {
  SynthConfig c = config_path.empty() ? SynthConfig::defaults() : load_synth_config(config_path);
  if (count) c.count = *count;
  if (seed) c.seed = *seed;
  if (rest) c = c.rest();
  c.validate();
  const std::string json = to_json(c);
  const std::string hash = fnv1a_hex(json);
  err << "synth config (hash " << hash << "):\n" << json << "\n";
  const fs::path path = resolve_out(out_path);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto records = synthesize(c, schema);
  write_records(path, records, schema, "config_hash=" + hash);
  ingest(path, schema, std::string("mm"));
  out << "wrote " << records.size() << " poses to " << path.string() << "\n";
  return 0;
}

int cmd_train(const TrainFlags& flags, const std::string& data, const std::string& eval,
              const std::string& out_dir, const Schema& schema, std::ostream& out,
              std::ostream& err) {
  const TrainConfig config = flags.resolve();
  const PoseSet train_set = load_pose_set(data, schema, err);
  std::optional<PoseSet> eval_set;
  if (!eval.empty()) {
    eval_set = load_pose_set(eval, schema, err);
    if (!eval_set->has_ground_truth()) throw ConfigError(eval + " has no 3D ground truth to evaluate against");
  }
  const fs::path dir = resolve_out(out_dir);
  fs::create_directories(dir);
  const std::string hash = config_hash(config);
  write_text(dir / "config.json", to_json(config) + "\n");
  err << "config (hash " << hash << "): " << to_json(config) << "\n";

  TrainResult result = train(train_set, config, schema, eval_set ? &*eval_set : nullptr,
                             TrainOutput{dir});
  for (const auto& e : result.record.epochs) {
    out << "epoch " << e.epoch << " d_loss " << e.d_loss << " g_loss " << e.g_loss;
    if (e.eval_mpjpe) out << " eval_mpjpe " << *e.eval_mpjpe;
    out << "\n";
  }
  if (eval_set) {
    const MetricsReport report = evaluate(result.trainer.lifter(), *eval_set);
    write_report_csv(dir / "metrics.csv", report, hash);
    out << format_report(report);
  }
  const Checkpoint check = load_checkpoint(dir / "model.ckpt");
  if (check.header.config_hash != hash) throw FormatError("written checkpoint failed verification");
  out << "model written to " << (dir / "model.ckpt").string() << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data, const std::string& report_path,
             const std::string& rep, bool no_scale, bool no_align, const Schema& schema,
             std::ostream& out, std::ostream& err) {
  const Checkpoint ck = load_checkpoint(ckpt_path);
  std::optional<Representation> expected;
  if (!rep.empty()) expected = parse_representation(rep);
  const LifterModel lifter = load_lifter(ck, schema, expected);
  const PoseSet set = load_pose_set(data, schema, err);
  if (!set.has_ground_truth()) throw ConfigError(data + " has no 3D ground truth to evaluate against");
  EvalOptions options;
  options.with_scale = !no_scale;
  options.align = !no_align;
  const MetricsReport report = evaluate(lifter, set, options);
  out << "representation " << ck.header.representation << " (config " << ck.header.config_hash << ")\n";
  out << format_report(report);
  if (!report_path.empty()) {
    const fs::path path = resolve_out(report_path);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_report_csv(path, report, ck.header.config_hash);
    out << "report written to " << path.string() << "\n";
  }
  return 0;
}

int cmd_probe(const std::string& ckpt_path, const std::string& data, const std::string& out_dir,
              const std::string& rep, std::optional<std::size_t> max_poses,
              std::optional<std::size_t> pose_index, const Schema& schema, std::ostream& out,
              std::ostream& err) {
  const Checkpoint ck = load_checkpoint(ckpt_path);
  std::optional<Representation> expected;
  if (!rep.empty()) expected = parse_representation(rep);
  const LifterModel lifter = load_lifter(ck, schema, expected);
  const PoseSet set = load_pose_set(data, schema, err);
  ProbeOptions options;
  options.max_poses = max_poses;
  if (pose_index) {
    options.aggregation = ProbeAggregation::SinglePose;
    options.pose_index = *pose_index;
  }
  const SensitivityTensor t = probe_correlations(lifter, set, options);
  const fs::path dir = resolve_out(out_dir);
  write_sensitivity(dir, t, schema, ck.header.config_hash);
  out << "cross-segment max |deviation| (leg/torso): "
      << max_cross_segment(t, schema, PartitionId::LegTorso) << "\n";
  out << "cross-segment max |deviation| (five limbs): "
      << max_cross_segment(t, schema, PartitionId::FiveLimbs) << "\n";
  out << "sensitivity written to " << dir.string() << "\n";
  return 0;
}

int cmd_stability(const TrainFlags& flags, const std::string& seeds_text, const std::string& data,
                  const std::string& eval, const std::string& window, unsigned jobs,
                  const std::string& out_dir, const Schema& schema, std::ostream& out,
                  std::ostream& err) {
  const TrainConfig config = flags.resolve();
  const auto seeds = parse_seeds(seeds_text);
  if (seeds.size() < 2) throw ConfigError("--seeds needs at least two seeds");
  StabilityOptions options;
  options.jobs = jobs;
  if (!window.empty()) {
    const auto colon = window.find(':');
    if (colon == std::string::npos) throw ConfigError("--window expects FIRST:LAST");
    try {
      options.window = EpochWindow{std::stoi(window.substr(0, colon)), std::stoi(window.substr(colon + 1))};
    } catch (const std::exception&) {
      throw ConfigError("--window expects FIRST:LAST epoch numbers");
    }
    if (options.window->first < 1 || options.window->last < options.window->first ||
        options.window->last > config.epochs) {
      throw ConfigError("--window lies outside 1:" + std::to_string(config.epochs));
    }
  }
  const PoseSet train_set = load_pose_set(data, schema, err);
  const PoseSet eval_set = eval.empty() ? train_set : load_pose_set(eval, schema, err);
  if (!eval_set.has_ground_truth()) throw ConfigError("stability needs an eval set with 3D ground truth");
  const fs::path dir = resolve_out(out_dir);
  fs::create_directories(dir);
  options.directory = dir;
  const std::string hash = config_hash(config);
  write_text(dir / "config.json", to_json(config) + "\n");
  err << "config (hash " << hash << "): " << to_json(config) << "\n";
  const StabilityResult result = stability_study(config, seeds, train_set, eval_set, schema, options);
  write_stability(dir, result.summary, hash);
  out << format_stability(result.summary);
  return result.summary.aborted.empty() ? 0 : 3;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unsupervised 2D-to-3D pose lifting: data synthesis, training, evaluation and studies",
               "liftpose"};
  app.require_subcommand(1);
  CommonOptions common;
  app.add_option("--schema", common.schema, "joint schema file")->check(CLI::ExistingFile);

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  std::string synth_config, synth_out;
  std::optional<std::size_t> synth_count;
  std::optional<std::uint64_t> synth_seed;
  bool synth_rest = false;
  synth->add_option("--config", synth_config, "JSON generator configuration")->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "output dataset file")->required();
  synth->add_option("--count", synth_count, "number of poses")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_flag("--rest", synth_rest, "collapse every angle range (rest pose only)");

  auto* train_cmd = app.add_subcommand("train", "train a lifter");
  TrainFlags train_flags;
  std::string train_data, train_eval, train_out;
  train_flags.attach(train_cmd, true);
  train_cmd->add_option("--data", train_data, "training dataset")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--eval", train_eval, "evaluation dataset with 3D ground truth")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train_out, "run directory")->required();

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string eval_ckpt, eval_data, eval_report, eval_rep;
  bool no_scale = false, no_align = false;
  eval_cmd->add_option("--ckpt", eval_ckpt, "checkpoint")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", eval_data, "dataset with 3D ground truth")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--report", eval_report, "metrics CSV path");
  eval_cmd->add_option("--rep", eval_rep, "expected representation");
  auto* ns = eval_cmd->add_flag("--no-scale", no_scale, "rigid alignment without scale");
  auto* na = eval_cmd->add_flag("--no-align", no_align, "skip alignment");
  ns->excludes(na);

  auto* probe_cmd = app.add_subcommand("probe", "keypoint sensitivity probe");
  std::string probe_ckpt, probe_data, probe_out, probe_rep;
  std::optional<std::size_t> probe_max, probe_index;
  probe_cmd->add_option("--ckpt", probe_ckpt, "checkpoint")->required()->check(CLI::ExistingFile);
  probe_cmd->add_option("--data", probe_data, "dataset")->required()->check(CLI::ExistingFile);
  probe_cmd->add_option("--out", probe_out, "output directory")->required();
  probe_cmd->add_option("--rep", probe_rep, "expected representation");
  auto* pm = probe_cmd->add_option("--max-poses", probe_max, "average over the first N poses")
                 ->check(CLI::PositiveNumber);
  auto* pi = probe_cmd->add_option("--pose-index", probe_index, "signed deviations of one pose");
  pm->excludes(pi);

  auto* stab = app.add_subcommand("stability", "multi-seed stability study");
  TrainFlags stab_flags;
  std::string stab_seeds, stab_data, stab_eval, stab_window, stab_out;
  unsigned stab_jobs = 0;
  stab_flags.attach(stab, false);
  stab->add_option("--seeds", stab_seeds, "comma separated seeds")->required();
  stab->add_option("--data", stab_data, "training dataset")->required()->check(CLI::ExistingFile);
  stab->add_option("--eval", stab_eval, "evaluation dataset (default: training set)")
      ->check(CLI::ExistingFile);
  stab->add_option("--window", stab_window, "epoch window FIRST:LAST (default: last quarter)");
  stab->add_option("--jobs", stab_jobs, "parallel runs (0 = all cores)");
  stab->add_option("--out", stab_out, "output directory")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    const Schema schema = load_schema(common);
    if (synth->parsed()) {
      return cmd_synth(synth_config, synth_count, synth_seed, synth_rest, synth_out, schema, out, err);
    }
    if (train_cmd->parsed()) {
      return cmd_train(train_flags, train_data, train_eval, train_out, schema, out, err);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(eval_ckpt, eval_data, eval_report, eval_rep, no_scale, no_align, schema, out, err);
    }
    if (probe_cmd->parsed()) {
      return cmd_probe(probe_ckpt, probe_data, probe_out, probe_rep, probe_max, probe_index, schema,
                       out, err);
    }
    return cmd_stability(stab_flags, stab_seeds, stab_data, stab_eval, stab_window, stab_jobs,
                         stab_out, schema, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace liftpose
