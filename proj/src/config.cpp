#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "liftpose/errors.hpp"
#include "liftpose/training.hpp"

namespace liftpose {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown configuration key '" + where + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("configuration key '" + where + key + "' has the wrong type: " + e.what());
  }
}

json arch_json(const ArchitectureConfig& a) {
  return json{{"base_width", a.base_width},         {"full_blocks", a.full_blocks},
              {"local_blocks", a.local_blocks},     {"combiner_blocks", a.combiner_blocks},
              {"feature_width", a.feature_width},   {"disc_width", a.disc_width},
              {"disc_blocks", a.disc_blocks},       {"dropout", a.dropout}};
}

json config_json(const TrainConfig& c) {
  return json{{"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"epochs", c.epochs},
              {"label_flip", c.label_flip},
              {"seed", c.seed},
              {"representation", std::string(to_id(c.representation))},
              {"weights",
               {{"adversarial", c.weights.adversarial},
                {"reprojection", c.weights.reprojection},
                {"ninety", c.weights.ninety},
                {"group_adversarial", c.weights.group_adversarial}}},
              {"architecture", arch_json(c.architecture)},
              {"renormalize_reprojection", c.renormalize_reprojection},
              {"checkpoint_every", c.checkpoint_every}};
}

TrainConfig config_from(const json& j, TrainConfig c) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  reject_unknown(j,
                 {"batch_size", "learning_rate", "epochs", "label_flip", "seed", "representation",
                  "weights", "architecture", "renormalize_reprojection", "checkpoint_every"},
                 "");
  read(j, "batch_size", c.batch_size, "");
  read(j, "learning_rate", c.learning_rate, "");
  read(j, "epochs", c.epochs, "");
  read(j, "label_flip", c.label_flip, "");
  read(j, "seed", c.seed, "");
  read(j, "renormalize_reprojection", c.renormalize_reprojection, "");
  read(j, "checkpoint_every", c.checkpoint_every, "");
  if (j.contains("representation")) {
    std::string id;
    read(j, "representation", id, "");
    c.representation = parse_representation(id);
  }
  if (j.contains("weights")) {
    const json& w = j.at("weights");
    if (!w.is_object()) throw ConfigError("configuration key 'weights' must be an object");
    reject_unknown(w, {"adversarial", "reprojection", "ninety", "group_adversarial"}, "weights.");
    read(w, "adversarial", c.weights.adversarial, "weights.");
    read(w, "reprojection", c.weights.reprojection, "weights.");
    read(w, "ninety", c.weights.ninety, "weights.");
    read(w, "group_adversarial", c.weights.group_adversarial, "weights.");
  }
  if (j.contains("architecture")) {
    const json& a = j.at("architecture");
    if (!a.is_object()) throw ConfigError("configuration key 'architecture' must be an object");
    const std::string p = "architecture.";
    reject_unknown(a,
                   {"base_width", "full_blocks", "local_blocks", "combiner_blocks", "feature_width",
                    "disc_width", "disc_blocks", "dropout"},
                   p);
    auto& arch = c.architecture;
    read(a, "base_width", arch.base_width, p);
    read(a, "full_blocks", arch.full_blocks, p);
    read(a, "local_blocks", arch.local_blocks, p);
    read(a, "combiner_blocks", arch.combiner_blocks, p);
    read(a, "feature_width", arch.feature_width, p);
    read(a, "disc_width", arch.disc_width, p);
    read(a, "disc_blocks", arch.disc_blocks, p);
    read(a, "dropout", arch.dropout, p);
  }
  c.validate();
  return c;
}

json epoch_json(const EpochRecord& e) {
  json j{{"type", "epoch"},
         {"epoch", e.epoch},
         {"d_loss", e.d_loss},
         {"g_loss", e.g_loss},
         {"group_loss", e.group_loss},
         {"reprojection", e.reprojection},
         {"ninety", e.ninety},
         {"label_flips", e.label_flips},
         {"steps", e.steps}};
  j["eval_mpjpe"] = e.eval_mpjpe ? json(*e.eval_mpjpe) : json(nullptr);
  return j;
}

}  // namespace

TrainConfig TrainConfig::large() { return TrainConfig{}; }

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.batch_size = 256;
  c.epochs = 200;
  c.learning_rate = 1e-3;
  c.architecture = ArchitectureConfig::desk();
  return c;
}

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive and finite");
  }
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(label_flip >= 0.0 && label_flip <= 1.0)) throw ConfigError("label_flip must lie in [0, 1]");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must not be negative");
  weights.validate();
  const auto& a = architecture;
  if (a.base_width < 1 || a.feature_width < 1 || a.disc_width < 1) {
    throw ConfigError("architecture widths must be positive");
  }
  if (a.full_blocks < 0 || a.local_blocks < 0 || a.combiner_blocks < 0 || a.disc_blocks < 0) {
    throw ConfigError("architecture block counts must not be negative");
  }
  if (!(a.dropout >= 0.0 && a.dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

TrainConfig train_profile(const std::string& name) {
  if (name == "large") return TrainConfig::large();
  if (name == "desk") return TrainConfig::desk();
  throw ConfigError("unknown profile '" + name + "' (expected 'desk' or 'large')");
}

std::string to_json(const TrainConfig& config) { return config_json(config).dump(); }

TrainConfig train_config_from_json(const std::string& text, const TrainConfig& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
  }
  return config_from(j, base);
}

TrainConfig load_train_config(const std::filesystem::path& path, const TrainConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return train_config_from_json(ss.str(), base);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string config_hash(const TrainConfig& config) { return fnv1a_hex(to_json(config)); }

std::string run_record_jsonl(const RunRecord& r) {
  json header{{"type", "run"},
              {"seed", r.seed},
              {"config_hash", r.config_hash},
              {"config", r.config_json.empty() ? json::object() : json::parse(r.config_json)},
              {"groups", r.group_names},
              {"checkpoints", r.checkpoints},
              {"aborted", r.aborted},
              {"abort_reason", r.abort_reason}};
  std::string out = header.dump() + "\n";
  for (const auto& e : r.epochs) out += epoch_json(e).dump() + "\n";
  return out;
}

void write_run_record(const std::filesystem::path& path, const RunRecord& record) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write run record " + path.string());
  out << run_record_jsonl(record);
  if (!out) throw Error("failed writing run record " + path.string());
}

RunRecord read_run_record(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open run record " + path.string());
  RunRecord r;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  try {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "run") {
        r.seed = j.at("seed").get<std::uint64_t>();
        r.config_hash = j.at("config_hash").get<std::string>();
        r.config_json = j.at("config").dump();
        r.group_names = j.at("groups").get<std::vector<std::string>>();
        r.checkpoints = j.at("checkpoints").get<std::vector<std::string>>();
        r.aborted = j.at("aborted").get<bool>();
        r.abort_reason = j.at("abort_reason").get<std::string>();
        have_header = true;
      } else if (type == "epoch") {
        EpochRecord e;
        e.epoch = j.at("epoch").get<int>();
        e.d_loss = j.at("d_loss").get<double>();
        e.g_loss = j.at("g_loss").get<double>();
        e.group_loss = j.at("group_loss").get<std::vector<double>>();
        e.reprojection = j.at("reprojection").get<double>();
        e.ninety = j.at("ninety").get<double>();
        e.label_flips = j.at("label_flips").get<std::size_t>();
        e.steps = j.at("steps").get<std::size_t>();
        if (!j.at("eval_mpjpe").is_null()) e.eval_mpjpe = j.at("eval_mpjpe").get<double>();
        r.epochs.push_back(std::move(e));
      } else {
        throw FormatError("unknown record type '" + type + "'");
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
  }
  if (!have_header) throw FormatError(path.string() + ": missing run header line");
  return r;
}

}  // namespace liftpose
