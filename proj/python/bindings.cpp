#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "liftpose/checkpoint.hpp"
#include "liftpose/dataset.hpp"
#include "liftpose/errors.hpp"
#include "liftpose/geometry.hpp"
#include "liftpose/losses.hpp"
#include "liftpose/metrics.hpp"
#include "liftpose/models.hpp"
#include "liftpose/pose.hpp"
#include "liftpose/probe.hpp"
#include "liftpose/stability.hpp"
#include "liftpose/synth.hpp"
#include "liftpose/training.hpp"

namespace py = pybind11;
using namespace liftpose;

namespace {

const Schema& schema() {
  static const Schema s = Schema::default_schema();
  return s;
}

PoseSet load_set(const std::filesystem::path& path) { return prepare(ingest(path, schema()), schema()); }

TrainConfig config_from(const std::string& json, const std::string& profile) {
  return train_config_from_json(json.empty() ? "{}" : json, train_profile(profile));
}

py::dict epoch_dict(const EpochRecord& e) {
  py::dict d;
  d["epoch"] = e.epoch;
  d["d_loss"] = e.d_loss;
  d["g_loss"] = e.g_loss;
  d["group_loss"] = e.group_loss;
  d["reprojection"] = e.reprojection;
  d["ninety"] = e.ninety;
  d["label_flips"] = e.label_flips;
  d["steps"] = e.steps;
  d["eval_mpjpe"] = e.eval_mpjpe ? py::object(py::float_(*e.eval_mpjpe)) : py::object(py::none());
  return d;
}

py::dict run_dict(const RunRecord& r) {
  py::dict d;
  d["seed"] = r.seed;
  d["config_hash"] = r.config_hash;
  d["groups"] = r.group_names;
  py::list epochs;
  for (const auto& e : r.epochs) epochs.append(epoch_dict(e));
  d["epochs"] = epochs;
  d["checkpoints"] = r.checkpoints;
  d["aborted"] = r.aborted;
  return d;
}

py::dict mean_std_dict(const MeanStd& m) {
  py::dict d;
  d["mean"] = m.mean;
  d["std"] = m.std;
  return d;
}

py::dict summary_dict(const StabilitySummary& s) {
  py::dict d;
  d["seeds"] = s.seeds;
  d["curves"] = s.curves;
  d["aborted"] = s.aborted;
  d["window"] = py::make_tuple(s.window.first, s.window.last);
  d["final"] = mean_std_dict(s.final_epoch);
  d["windowed"] = mean_std_dict(s.windowed);
  d["min"] = mean_std_dict(s.min_epoch);
  return d;
}

py::dict report_dict(const MetricsReport& r) {
  py::dict d;
  d["count"] = r.count;
  d["mpjpe"] = r.mpjpe;
  d["pck3d"] = r.pck3d;
  d["auc"] = r.auc;
  d["per_pose"] = r.per_pose;
  d["per_action"] = r.per_action;
  return d;
}

/// A trained lifter restored from a checkpoint.
class Lifter {
 public:
  explicit Lifter(const std::filesystem::path& checkpoint) : Lifter(load_checkpoint(checkpoint)) {}
  explicit Lifter(const Checkpoint& ck) : header_(ck.header), model_(load_lifter(ck, schema())) {}

  std::string representation() const { return std::string(to_id(model_.representation())); }
  std::size_t parameter_count() const { return model_.parameter_count(); }
  const CheckpointHeader& header() const { return header_; }

  Matrix lift(const Matrix& x, const Matrix& y) const { return model_.lift(x, y); }

  py::dict evaluate(const std::filesystem::path& data, bool with_scale) const {
    EvalOptions o;
    o.with_scale = with_scale;
    return report_dict(liftpose::evaluate(model_, load_set(data), o));
  }

  py::dict probe(const std::filesystem::path& data, std::optional<std::size_t> max_poses,
                 const std::filesystem::path& out) const {
    ProbeOptions o;
    o.max_poses = max_poses;
    const SensitivityTensor t = probe_correlations(model_, load_set(data), o);
    if (!out.empty()) write_sensitivity(out, t, schema(), header_.config_hash);
    py::dict d;
    d["scales"] = t.scales;
    py::array_t<double> values({static_cast<py::ssize_t>(t.keypoints), static_cast<py::ssize_t>(t.steps()),
                                static_cast<py::ssize_t>(t.keypoints)});
    std::copy(t.values.begin(), t.values.end(), values.mutable_data());
    d["values"] = values;
    d["cross_leg_torso"] = max_cross_segment(t, schema(), PartitionId::LegTorso);
    d["cross_five_limbs"] = max_cross_segment(t, schema(), PartitionId::FiveLimbs);
    return d;
  }

 private:
  CheckpointHeader header_;
  LifterModel model_;
};

}  // namespace

PYBIND11_MODULE(_liftpose, m) {
  m.doc() = "2D-to-3D pose lifting with segment-wise representations";

  auto base = py::register_exception<Error>(m, "LiftposeError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<SchemaError>(m, "SchemaError", base.ptr());
  py::register_exception<NormalizationError>(m, "NormalizationError", base.ptr());
  py::register_exception<ContractError>(m, "ContractError", base.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());
  py::register_exception<AlignmentError>(m, "AlignmentError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());

  m.def("joint_names", [] { return schema().joints(); });
  m.def("representations", [] {
    std::vector<std::string> ids;
    for (auto r : all_representations()) ids.emplace_back(to_id(r));
    return ids;
  });
  m.def(
      "parameter_counts",
      [](const std::string& profile) {
        const ArchitectureConfig arch = profile == "large" ? ArchitectureConfig::large() : ArchitectureConfig::desk();
        if (profile != "large" && profile != "desk") throw ConfigError("unknown profile '" + profile + "'");
        std::map<std::string, std::size_t> out;
        for (auto r : all_representations()) out[std::string(to_id(r))] = plan_lifter(r, schema(), arch).parameter_count();
        return out;
      },
      py::arg("profile") = "desk");

  m.def(
      "normalize_pose",
      [](const Matrix& raw) {
        const Pose2D p = normalize_pose(raw, schema());
        return py::make_tuple(p.coords, p.scale);
      },
      py::arg("raw"), "Root-centers and max-normalizes a 16 x 2 pose; returns (coords, scale).");
  m.def(
      "sample_rotations",
      [](std::size_t count, std::uint64_t seed) {
        Rng rng(seed);
        std::vector<Eigen::Matrix3d> out;
        for (std::size_t i = 0; i < count; ++i) out.push_back(sample_rotation(rng).rotation.matrix());
        return out;
      },
      py::arg("count"), py::arg("seed") = 0);
  m.def(
      "rotate_quarter_turns",
      [](const Matrix& coords, int k) { return rotate_quarter_turns(Pose3D{coords, 1.0}, k).coords; },
      py::arg("coords"), py::arg("k"));
  m.def("project", [](const Matrix& coords) { return project(Pose3D{coords, 1.0}).coords; }, py::arg("coords"));

  m.def(
      "lsgan_losses",
      [](const Matrix& real, const Matrix& fake, bool flip) {
        const LsganLosses l = lsgan_losses(real, fake, flip);
        return py::make_tuple(l.d_loss, l.g_loss);
      },
      py::arg("real_scores"), py::arg("fake_scores"), py::arg("flip") = false);
  m.def(
      "total_generator_loss",
      [](double adv, double l2d, double l90, double w1, double w2, double w3) {
        return total_generator_loss(adv, l2d, l90, LossWeights{w1, w2, w3, {}});
      },
      py::arg("adversarial"), py::arg("reprojection"), py::arg("ninety"), py::arg("w1") = 1.0, py::arg("w2") = 1.0,
      py::arg("w3") = 1.0);

  m.def("rigid_align", &rigid_align, py::arg("pred"), py::arg("gt"), py::arg("with_scale") = true);
  m.def("mpjpe", &mpjpe, py::arg("pred"), py::arg("gt"));
  m.def(
      "pck3d_auc",
      [](const Matrix& errors, double threshold) {
        const PckAuc r = pck3d_auc(errors, threshold);
        return py::make_tuple(r.pck, r.auc);
      },
      py::arg("errors"), py::arg("threshold") = kPckThresholdMm);

  m.def(
      "synthesize",
      [](const std::filesystem::path& out, std::size_t count, std::uint64_t seed, const std::string& config_json) {
        SynthConfig c = config_json.empty() ? SynthConfig::defaults() : synth_config_from_json(config_json);
        c.count = count;
        c.seed = seed;
        c.validate();
        write_records(out, synthesize(c, schema()), schema(), "config_hash=" + fnv1a_hex(to_json(c)));
      },
      py::arg("out"), py::arg("count"), py::arg("seed") = 0, py::arg("config_json") = "",
      "Writes a synthetic dataset file.");
  m.def(
      "load_poses",
      [](const std::filesystem::path& path) {
        const PoseSet s = load_set(path);
        py::dict d;
        d["ids"] = s.ids;
        d["x"] = s.x;
        d["y"] = s.y;
        d["scale"] = s.scale;
        d["gt"] = s.gt;
        return d;
      },
      py::arg("path"), "Ingests and normalizes a dataset file.");

  m.def(
      "default_config",
      [](const std::string& profile) { return to_json(train_profile(profile)); }, py::arg("profile") = "desk",
      "Training configuration of a named profile, as JSON.");
  m.def(
      "train",
      [](const std::filesystem::path& data, const std::string& config_json, const std::string& profile,
         std::optional<std::filesystem::path> eval, const std::filesystem::path& out) {
        const TrainConfig c = config_from(config_json, profile);
        const PoseSet train_set = load_set(data);
        std::optional<PoseSet> eval_set;
        if (eval) eval_set = load_set(*eval);
        RunRecord record;
        {
          py::gil_scoped_release release;
          record = liftpose::train(train_set, c, schema(), eval_set ? &*eval_set : nullptr, {out}).record;
        }
        return run_dict(record);
      },
      py::arg("data"), py::arg("config_json") = "", py::arg("profile") = "desk", py::arg("eval") = py::none(),
      py::arg("out") = std::filesystem::path());
  m.def(
      "stability",
      [](const std::filesystem::path& data, const std::vector<std::uint64_t>& seeds, const std::string& config_json,
         const std::string& profile, std::optional<std::filesystem::path> eval,
         std::optional<std::pair<int, int>> window, const std::filesystem::path& out, unsigned jobs) {
        const TrainConfig c = config_from(config_json, profile);
        const PoseSet train_set = load_set(data);
        const PoseSet eval_set = eval ? load_set(*eval) : train_set;
        StabilityOptions o;
        if (window) o.window = EpochWindow{window->first, window->second};
        o.jobs = jobs;
        o.directory = out;
        StabilitySummary s;
        {
          py::gil_scoped_release release;
          s = stability_study(c, seeds, train_set, eval_set, schema(), o).summary;
        }
        if (!out.empty()) write_stability(out, s, config_hash(c));
        return summary_dict(s);
      },
      py::arg("data"), py::arg("seeds"), py::arg("config_json") = "", py::arg("profile") = "desk",
      py::arg("eval") = py::none(), py::arg("window") = py::none(), py::arg("out") = std::filesystem::path(),
      py::arg("jobs") = 0);
  m.def(
      "summarize",
      [](const std::vector<std::uint64_t>& seeds, const std::vector<std::vector<double>>& curves,
         std::pair<int, int> window) { return summary_dict(summarize(seeds, curves, {window.first, window.second})); },
      py::arg("seeds"), py::arg("curves"), py::arg("window"));

  py::class_<Lifter>(m, "Lifter")
      .def(py::init<const std::filesystem::path&>(), py::arg("checkpoint"))
      .def_property_readonly("representation", &Lifter::representation)
      .def_property_readonly("parameter_count", &Lifter::parameter_count)
      .def_property_readonly("config_json", [](const Lifter& l) { return l.header().config_json; })
      .def_property_readonly("config_hash", [](const Lifter& l) { return l.header().config_hash; })
      .def_property_readonly("epoch", [](const Lifter& l) { return l.header().epoch; })
      .def("lift", &Lifter::lift, py::arg("x"), py::arg("y"), "B x 16 normalized inputs to B x 16 ordinates.")
      .def("evaluate", &Lifter::evaluate, py::arg("data"), py::arg("with_scale") = true)
      .def("probe", &Lifter::probe, py::arg("data"), py::arg("max_poses") = py::none(),
           py::arg("out") = std::filesystem::path());
}
