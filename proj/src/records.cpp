#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "liftpose/dataset.hpp"
#include "liftpose/errors.hpp"

namespace liftpose {
namespace {

using nlohmann::json;

std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

Matrix read_keypoints(const json& obj, const Schema& schema, int dims, const char* key,
                      const std::string& at) {
  if (!obj.is_object()) throw FormatError(at + "'" + key + "' must be an object of named joints");
  for (const auto& [name, _] : obj.items()) {
    if (!schema.contains(name)) throw SchemaError(at + "unknown joint '" + name + "' in '" + key + "'");
  }
  const int n = schema.size();
  Matrix m(n, dims);
  for (int j = 0; j < n; ++j) {
    const std::string& name = schema.name(j);
    auto it = obj.find(name);
    if (it == obj.end()) throw SchemaError(at + "missing joint '" + name + "' in '" + key + "'");
    if (!it->is_array() || static_cast<int>(it->size()) != dims) {
      throw FormatError(at + "joint '" + name + "' in '" + key + "' must have " +
                        std::to_string(dims) + " coordinates");
    }
    for (int d = 0; d < dims; ++d) {
      const json& v = (*it)[static_cast<std::size_t>(d)];
      if (!v.is_number()) throw FormatError(at + "joint '" + name + "' has a non-numeric coordinate");
      const double value = v.get<double>();
      if (!std::isfinite(value)) throw FormatError(at + "joint '" + name + "' is not finite");
      m(j, d) = value;
    }
  }
  return m;
}

json write_keypoints(const Matrix& m, const Schema& schema) {
  json obj = json::object();
  for (int j = 0; j < schema.size(); ++j) {
    json coords = json::array();
    for (Eigen::Index d = 0; d < m.cols(); ++d) coords.push_back(m(j, d));
    obj[schema.name(j)] = std::move(coords);
  }
  return obj;
}

}  // namespace

std::vector<PoseRecord> ingest(std::istream& in, const Schema& schema,
                               const std::optional<std::string>& expected_units,
                               const std::string& source) {
  std::vector<PoseRecord> out;
  std::optional<std::string> units = expected_units;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const std::string at = where(source, lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(at + "malformed record: " + e.what());
    }
    if (!j.is_object()) throw FormatError(at + "record must be a JSON object");
    PoseRecord r;
    try {
      r.id = j.at("id").get<std::string>();
      if (j.contains("action") && !j["action"].is_null()) r.action = j["action"].get<std::string>();
      if (j.contains("camera") && !j["camera"].is_null()) r.camera = j["camera"].get<std::string>();
      r.units = j.at("units").get<std::string>();
    } catch (const json::exception& e) {
      throw FormatError(at + "bad record header field: " + e.what());
    }
    if (!units) units = r.units;
    if (r.units != *units) {
      throw FormatError(at + "unit mismatch: record uses '" + r.units + "', expected '" + *units + "'");
    }
    if (!j.contains("kp2d")) throw FormatError(at + "record has no 'kp2d'");
    try {
      r.keypoints2d = read_keypoints(j["kp2d"], schema, 2, "kp2d", at);
      if (j.contains("kp3d") && !j["kp3d"].is_null()) {
        r.keypoints3d = read_keypoints(j["kp3d"], schema, 3, "kp3d", at);
      }
    } catch (const SchemaError& e) {
      const std::string msg = e.what();
      throw SchemaError(msg.rfind(source, 0) == 0 ? msg : at + msg);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<PoseRecord> ingest(const std::filesystem::path& path, const Schema& schema,
                               const std::optional<std::string>& expected_units) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open dataset " + path.string());
  return ingest(in, schema, expected_units, path.string());
}

std::string to_record_line(const PoseRecord& r, const Schema& schema) {
  if (r.keypoints2d.rows() != schema.size() || r.keypoints2d.cols() != 2) {
    throw DimensionError("record '" + r.id + "' 2D keypoints are not N x 2");
  }
  json j{{"id", r.id}, {"units", r.units}, {"kp2d", write_keypoints(r.keypoints2d, schema)}};
  if (r.action) j["action"] = *r.action;
  if (r.camera) j["camera"] = *r.camera;
  if (r.keypoints3d) {
    if (r.keypoints3d->rows() != schema.size() || r.keypoints3d->cols() != 3) {
      throw DimensionError("record '" + r.id + "' 3D keypoints are not N x 3");
    }
    j["kp3d"] = write_keypoints(*r.keypoints3d, schema);
  }
  return j.dump();
}

void write_records(std::ostream& out, const std::vector<PoseRecord>& records, const Schema& schema,
                   const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  for (const auto& r : records) out << to_record_line(r, schema) << '\n';
}

void write_records(const std::filesystem::path& path, const std::vector<PoseRecord>& records,
                   const Schema& schema, const std::string& comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dataset " + path.string());
  write_records(out, records, schema, comment);
  if (!out) throw Error("failed writing dataset " + path.string());
}

Pose2D PoseSet::pose(std::size_t i) const {
  const auto r = static_cast<Eigen::Index>(i);
  Pose2D p;
  p.coords.resize(x.cols(), 2);
  p.coords.col(0) = x.row(r).transpose();
  p.coords.col(1) = y.row(r).transpose();
  p.scale = scale(r);
  return p;
}

Matrix PoseSet::ground_truth(std::size_t i) const {
  if (!has_ground_truth()) throw ContractError("pose set has no ground truth");
  const auto r = static_cast<Eigen::Index>(i);
  const Eigen::Index n = x.cols();
  Matrix g(n, 3);
  for (Eigen::Index d = 0; d < 3; ++d) g.col(d) = gt.row(r).segment(d * n, n).transpose();
  return g;
}

PoseSet PoseSet::subset(const std::vector<std::size_t>& rows) const {
  PoseSet s;
  const auto b = static_cast<Eigen::Index>(rows.size());
  s.x.resize(b, x.cols());
  s.y.resize(b, y.cols());
  s.scale.resize(b);
  if (has_ground_truth()) s.gt.resize(b, gt.cols());
  for (Eigen::Index k = 0; k < b; ++k) {
    const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(k)]);
    if (r >= x.rows()) throw DimensionError("subset row out of range");
    s.x.row(k) = x.row(r);
    s.y.row(k) = y.row(r);
    s.scale(k) = scale(r);
    if (has_ground_truth()) s.gt.row(k) = gt.row(r);
    if (!ids.empty()) s.ids.push_back(ids[static_cast<std::size_t>(r)]);
    if (!actions.empty()) s.actions.push_back(actions[static_cast<std::size_t>(r)]);
  }
  return s;
}

PoseSet prepare(const std::vector<PoseRecord>& records, const Schema& schema,
                PrepareReport* report) {
  const int n = schema.size();
  std::vector<Pose2D> poses;
  std::vector<const PoseRecord*> kept;
  PrepareReport local;
  for (const auto& r : records) {
    if (r.keypoints2d.rows() != n || r.keypoints2d.cols() != 2) {
      throw DimensionError("record '" + r.id + "' does not match the schema");
    }
    try {
      poses.push_back(normalize_pose(r.keypoints2d, schema));
      kept.push_back(&r);
    } catch (const NormalizationError& e) {
      ++local.skipped;
      local.warnings.push_back("skipped degenerate pose '" + r.id + "': " + e.what());
    }
  }
  bool all_3d = !kept.empty();
  for (const auto* r : kept) all_3d = all_3d && r->keypoints3d.has_value();
  bool any_3d = false;
  for (const auto* r : kept) any_3d = any_3d || r->keypoints3d.has_value();
  if (any_3d && !all_3d) {
    local.warnings.push_back("ground truth dropped: only some records carry 3D keypoints");
  }

  PoseSet s;
  const auto b = static_cast<Eigen::Index>(kept.size());
  s.x.resize(b, n);
  s.y.resize(b, n);
  s.scale.resize(b);
  if (all_3d) s.gt.resize(b, 3 * n);
  for (Eigen::Index i = 0; i < b; ++i) {
    const Pose2D& p = poses[static_cast<std::size_t>(i)];
    const PoseRecord& r = *kept[static_cast<std::size_t>(i)];
    s.x.row(i) = p.coords.col(0).transpose();
    s.y.row(i) = p.coords.col(1).transpose();
    s.scale(i) = p.scale;
    if (all_3d) {
      const Matrix g = root_center(*r.keypoints3d, schema);
      for (Eigen::Index d = 0; d < 3; ++d) s.gt.row(i).segment(d * n, n) = g.col(d).transpose();
    }
    s.ids.push_back(r.id);
    s.actions.push_back(r.action.value_or(""));
  }
  if (report) *report = std::move(local);
  return s;
}

}  // namespace liftpose
