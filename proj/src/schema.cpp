#include "liftpose/schema.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "liftpose/errors.hpp"

namespace liftpose {
namespace {

constexpr const char* kDefaultSchema = R"(liftpose-schema 1
joints right_hip right_knee right_ankle left_hip left_knee left_ankle spine thorax neck head left_shoulder left_elbow left_wrist right_shoulder right_elbow right_wrist
hips left_hip right_hip
segment leg_torso legs right_hip right_knee right_ankle left_hip left_knee left_ankle
segment leg_torso torso spine thorax neck head left_shoulder left_elbow left_wrist right_shoulder right_elbow right_wrist
segment five_limbs right_leg right_hip right_knee right_ankle
segment five_limbs left_leg left_hip left_knee left_ankle
segment five_limbs torso spine thorax neck head
segment five_limbs left_arm left_shoulder left_elbow left_wrist
segment five_limbs right_arm right_shoulder right_elbow right_wrist
)";

}  // namespace

std::string_view to_string(PartitionId id) {
  return id == PartitionId::LegTorso ? "leg_torso" : "five_limbs";
}

PartitionId parse_partition(std::string_view name) {
  if (name == "leg_torso") return PartitionId::LegTorso;
  if (name == "five_limbs") return PartitionId::FiveLimbs;
  throw SchemaError("unknown partition '" + std::string(name) + "'");
}

Schema Schema::default_schema() { return parse(kDefaultSchema); }

Schema Schema::parse(const std::string& text) {
  Schema schema;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool have_version = false;
  std::vector<std::pair<int, std::vector<std::string>>> segment_lines;
  std::vector<std::string> hips;

  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::vector<std::string> tok;
    for (std::string w; words >> w;) tok.push_back(w);
    if (tok.empty()) continue;
    const std::string where = "schema line " + std::to_string(line_no) + ": ";
    if (tok[0] == "liftpose-schema") {
      if (tok.size() != 2 || tok[1] != std::to_string(kSchemaVersion)) {
        throw SchemaError(where + "unsupported schema version");
      }
      have_version = true;
    } else if (tok[0] == "joints") {
      schema.joints_.assign(tok.begin() + 1, tok.end());
    } else if (tok[0] == "hips") {
      if (tok.size() != 3) throw SchemaError(where + "expected 'hips <left> <right>'");
      hips = {tok[1], tok[2]};
    } else if (tok[0] == "segment") {
      if (tok.size() < 4) throw SchemaError(where + "expected 'segment <partition> <name> <joint>...'");
      segment_lines.emplace_back(line_no, std::vector<std::string>(tok.begin() + 1, tok.end()));
    } else {
      throw SchemaError(where + "unknown directive '" + tok[0] + "'");
    }
  }
  if (!have_version) throw SchemaError("schema: missing 'liftpose-schema' version line");
  if (schema.joints_.empty()) throw SchemaError("schema: missing 'joints' line");
  if (hips.empty()) throw SchemaError("schema: missing 'hips' line");
  std::set<std::string> unique(schema.joints_.begin(), schema.joints_.end());
  if (unique.size() != schema.joints_.size()) throw SchemaError("schema: duplicate joint names");

  schema.left_hip_ = schema.index(hips[0]);
  schema.right_hip_ = schema.index(hips[1]);
  for (const auto& [ln, tok] : segment_lines) {
    Segment seg;
    seg.name = tok[1];
    for (std::size_t i = 2; i < tok.size(); ++i) seg.joints.push_back(schema.index(tok[i]));
    std::sort(seg.joints.begin(), seg.joints.end());
    auto& part = parse_partition(tok[0]) == PartitionId::LegTorso ? schema.leg_torso_
                                                                  : schema.five_limbs_;
    for (const Segment& other : part) {
      if (other.name == seg.name) {
        throw SchemaError("schema line " + std::to_string(ln) + ": duplicate segment '" +
                          seg.name + "'");
      }
    }
    part.push_back(std::move(seg));
  }
  schema.validate();
  return schema;
}

Schema Schema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string Schema::to_text() const {
  std::ostringstream out;
  out << "liftpose-schema " << kSchemaVersion << "\njoints";
  for (const auto& j : joints_) out << ' ' << j;
  out << "\nhips " << joints_[left_hip_] << ' ' << joints_[right_hip_] << '\n';
  for (PartitionId id : {PartitionId::LegTorso, PartitionId::FiveLimbs}) {
    for (const Segment& seg : partition(id)) {
      out << "segment " << to_string(id) << ' ' << seg.name;
      for (int j : seg.joints) out << ' ' << joints_[j];
      out << '\n';
    }
  }
  return out.str();
}

int Schema::index(std::string_view joint) const {
  auto it = std::find(joints_.begin(), joints_.end(), joint);
  if (it == joints_.end()) throw SchemaError("unknown joint '" + std::string(joint) + "'");
  return static_cast<int>(it - joints_.begin());
}

bool Schema::contains(std::string_view joint) const {
  return std::find(joints_.begin(), joints_.end(), joint) != joints_.end();
}

const std::vector<Segment>& Schema::partition(PartitionId id) const {
  return id == PartitionId::LegTorso ? leg_torso_ : five_limbs_;
}

const Segment& Schema::segment(PartitionId id, std::string_view name) const {
  for (const Segment& seg : partition(id)) {
    if (seg.name == name) return seg;
  }
  throw SchemaError("unknown segment '" + std::string(name) + "' in partition " +
                    std::string(to_string(id)));
}

void Schema::validate() const {
  if (size() != kNumJoints) {
    throw SchemaError("schema must define exactly " + std::to_string(kNumJoints) +
                      " joints, found " + std::to_string(size()));
  }
  if (left_hip_ == right_hip_) throw SchemaError("schema: left and right hip must differ");
  auto check_cover = [&](PartitionId id, std::size_t expected_segments) {
    const auto& part = partition(id);
    const std::string pname(to_string(id));
    if (part.size() != expected_segments) {
      throw SchemaError("partition " + pname + " needs " + std::to_string(expected_segments) +
                        " segments, found " + std::to_string(part.size()));
    }
    std::vector<int> seen(size(), 0);
    for (const Segment& seg : part) {
      for (int j : seg.joints) ++seen[j];
    }
    for (int j = 0; j < size(); ++j) {
      if (seen[j] != 1) {
        throw SchemaError("partition " + pname + ": joint '" + joints_[j] +
                          (seen[j] == 0 ? "' is not covered" : "' appears in several segments"));
      }
    }
  };
  check_cover(PartitionId::LegTorso, 2);
  check_cover(PartitionId::FiveLimbs, 5);
  for (const Segment& seg : five_limbs_) {
    if (seg.joints.size() < 3 || seg.joints.size() > 4) {
      throw SchemaError("limb segment '" + seg.name + "' must have 3 or 4 joints");
    }
  }
}

}  // namespace liftpose
