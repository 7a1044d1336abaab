#include "liftpose/synth.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <Eigen/Geometry>
#include <json.hpp>

#include "liftpose/errors.hpp"
#include "liftpose/geometry.hpp"

namespace liftpose {
namespace {

using nlohmann::json;
using Eigen::Matrix3d;
using Eigen::Vector3d;

const std::vector<std::string> kBones = {"hip_half_width", "thigh",        "shin",
                                         "pelvis_spine",   "spine_thorax", "thorax_neck",
                                         "neck_head",      "shoulder_half_width",
                                         "upper_arm",      "forearm"};
const std::vector<std::string> kAngles = {"spine_flex",    "spine_lateral",   "spine_twist",
                                          "neck_flex",     "hip_flex",        "hip_abduct",
                                          "knee_flex",     "shoulder_flex",   "shoulder_abduct",
                                          "elbow_flex"};
const std::set<std::string> kSided = {"hip_flex",      "hip_abduct",      "knee_flex",
                                      "shoulder_flex", "shoulder_abduct", "elbow_flex"};

Matrix3d rx(double a) { return Eigen::AngleAxisd(a, Vector3d::UnitX()).toRotationMatrix(); }
Matrix3d ry(double a) { return Eigen::AngleAxisd(a, Vector3d::UnitY()).toRotationMatrix(); }
Matrix3d rz(double a) { return Eigen::AngleAxisd(a, Vector3d::UnitZ()).toRotationMatrix(); }

const Vector3d kUp(0.0, 1.0, 0.0);
const Vector3d kDown(0.0, -1.0, 0.0);

json range_json(const AngleRange& r) { return json::array({r.lo, r.hi}); }

AngleRange range_from(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError("synth key '" + key + "' must be a [lo, hi] pair");
  }
  return AngleRange{j[0].get<double>(), j[1].get<double>()};
}

double angle(const std::map<std::string, double>& a, const std::string& name) {
  auto it = a.find(name);
  return it == a.end() ? 0.0 : it->second;
}

}  // namespace

SynthConfig SynthConfig::defaults() {
  SynthConfig c;
  c.bones = {{"hip_half_width", 125.0}, {"thigh", 450.0},       {"shin", 445.0},
             {"pelvis_spine", 230.0},   {"spine_thorax", 255.0}, {"thorax_neck", 110.0},
             {"neck_head", 115.0},      {"shoulder_half_width", 150.0},
             {"upper_arm", 280.0},      {"forearm", 250.0}};
  c.angles = {{"spine_flex", {-0.2, 0.6}},     {"spine_lateral", {-0.25, 0.25}},
              {"spine_twist", {-0.4, 0.4}},    {"neck_flex", {-0.3, 0.5}},
              {"hip_flex", {-0.4, 1.6}},       {"hip_abduct", {-0.1, 0.5}},
              {"knee_flex", {0.0, 2.0}},       {"shoulder_flex", {-0.8, 2.2}},
              {"shoulder_abduct", {0.0, 1.5}}, {"elbow_flex", {0.0, 2.2}}};
  c.limits = {{"spine_flex", {-0.5, 1.2}},     {"spine_lateral", {-0.6, 0.6}},
              {"spine_twist", {-0.8, 0.8}},    {"neck_flex", {-0.8, 1.0}},
              {"hip_flex", {-0.6, 2.2}},       {"hip_abduct", {-0.5, 0.9}},
              {"knee_flex", {0.0, 2.6}},       {"shoulder_flex", {-1.0, 3.1}},
              {"shoulder_abduct", {-0.3, 3.1}}, {"elbow_flex", {0.0, 2.6}}};
  c.azimuth = {-std::numbers::pi, std::numbers::pi};
  c.elevation = {-kMaxElevation, kMaxElevation};
  return c;
}

SynthConfig SynthConfig::rest() const {
  SynthConfig c = *this;
  for (auto& [_, r] : c.angles) r = {0.0, 0.0};
  c.azimuth = {0.0, 0.0};
  c.elevation = {0.0, 0.0};
  return c;
}

void SynthConfig::validate() const {
  auto check_names = [](const auto& map, const std::vector<std::string>& names,
                        const std::string& what) {
    for (const auto& n : names) {
      if (!map.count(n)) throw ConfigError("synth " + what + " '" + n + "' is missing");
    }
    for (const auto& [n, _] : map) {
      if (std::find(names.begin(), names.end(), n) == names.end()) {
        throw ConfigError("unknown synth " + what + " '" + n + "'");
      }
    }
  };
  check_names(bones, kBones, "bone");
  check_names(angles, kAngles, "angle");
  check_names(limits, kAngles, "limit");
  for (const auto& [n, len] : bones) {
    if (!(len > 0.0) || !std::isfinite(len)) throw ConfigError("bone '" + n + "' must be positive");
  }
  for (const auto& [n, r] : angles) {
    const AngleRange& lim = limits.at(n);
    if (!(r.lo <= r.hi)) throw ConfigError("angle range '" + n + "' has lo > hi");
    if (r.lo < lim.lo || r.hi > lim.hi) {
      std::ostringstream msg;
      msg << "angle range '" << n << "' [" << r.lo << ", " << r.hi << "] exceeds its limit ["
          << lim.lo << ", " << lim.hi << "]";
      throw ConfigError(msg.str());
    }
  }
  if (!(azimuth.lo <= azimuth.hi) || azimuth.lo < -std::numbers::pi || azimuth.hi > std::numbers::pi) {
    throw ConfigError("camera azimuth range must lie in [-pi, pi]");
  }
  if (!(elevation.lo <= elevation.hi) || elevation.lo < -std::numbers::pi / 2 ||
      elevation.hi > std::numbers::pi / 2) {
    throw ConfigError("camera elevation range must lie in [-pi/2, pi/2]");
  }
  if (count == 0) throw ConfigError("synth count must be positive");
}

std::string to_json(const SynthConfig& c) {
  json angles = json::object(), limits = json::object();
  for (const auto& [n, r] : c.angles) angles[n] = range_json(r);
  for (const auto& [n, r] : c.limits) limits[n] = range_json(r);
  json j{{"bones", c.bones},
         {"angles", angles},
         {"limits", limits},
         {"count", c.count},
         {"azimuth", range_json(c.azimuth)},
         {"elevation", range_json(c.elevation)},
         {"seed", c.seed}};
  return j.dump(2);
}

SynthConfig synth_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("synth configuration is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("synth configuration must be a JSON object");
  SynthConfig c = SynthConfig::defaults();
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "bones") {
        for (const auto& [n, v] : value.items()) c.bones[n] = v.get<double>();
      } else if (key == "angles") {
        for (const auto& [n, v] : value.items()) c.angles[n] = range_from(v, "angles." + n);
      } else if (key == "limits") {
        for (const auto& [n, v] : value.items()) c.limits[n] = range_from(v, "limits." + n);
      } else if (key == "count") {
        c.count = value.get<std::size_t>();
      } else if (key == "azimuth") {
        c.azimuth = range_from(value, key);
      } else if (key == "elevation") {
        c.elevation = range_from(value, key);
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else {
        throw ConfigError("unknown synth configuration key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synth configuration has a wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

SynthConfig load_synth_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open synth configuration " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return synth_config_from_json(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<Bone> skeleton_bones(const SynthConfig& c, const Schema& s) {
  const auto& b = c.bones;
  auto j = [&](const char* name) { return s.index(name); };
  return {
      {j("right_hip"), j("left_hip"), 2.0 * b.at("hip_half_width")},
      {j("right_hip"), j("right_knee"), b.at("thigh")},
      {j("right_knee"), j("right_ankle"), b.at("shin")},
      {j("left_hip"), j("left_knee"), b.at("thigh")},
      {j("left_knee"), j("left_ankle"), b.at("shin")},
      {-1, j("spine"), b.at("pelvis_spine")},
      {j("spine"), j("thorax"), b.at("spine_thorax")},
      {j("thorax"), j("neck"), b.at("thorax_neck")},
      {j("neck"), j("head"), b.at("neck_head")},
      {j("thorax"), j("left_shoulder"), b.at("shoulder_half_width")},
      {j("left_shoulder"), j("left_elbow"), b.at("upper_arm")},
      {j("left_elbow"), j("left_wrist"), b.at("forearm")},
      {j("thorax"), j("right_shoulder"), b.at("shoulder_half_width")},
      {j("right_shoulder"), j("right_elbow"), b.at("upper_arm")},
      {j("right_elbow"), j("right_wrist"), b.at("forearm")},
  };
}

Matrix forward_kinematics(const SynthConfig& c, const Schema& s,
                          const std::map<std::string, double>& left,
                          const std::map<std::string, double>& right) {
  const auto& b = c.bones;
  Matrix pose = Matrix::Zero(s.size(), 3);
  auto put = [&](const char* name, const Vector3d& p) { pose.row(s.index(name)) = p.transpose(); };

  const Vector3d hip_l(b.at("hip_half_width"), 0.0, 0.0);
  const Vector3d hip_r = -hip_l;
  put("left_hip", hip_l);
  put("right_hip", hip_r);
  auto leg = [&](const Vector3d& hip, const std::map<std::string, double>& a, double side,
                 const char* knee, const char* ankle) {
    const Matrix3d r_hip = rz(side * angle(a, "hip_abduct")) * rx(-angle(a, "hip_flex"));
    const Vector3d k = hip + b.at("thigh") * (r_hip * kDown);
    const Vector3d an = k + b.at("shin") * (r_hip * rx(angle(a, "knee_flex")) * kDown);
    put(knee, k);
    put(ankle, an);
  };
  leg(hip_l, left, 1.0, "left_knee", "left_ankle");
  leg(hip_r, right, -1.0, "right_knee", "right_ankle");

  const Matrix3d trunk = ry(angle(left, "spine_twist")) * rz(angle(left, "spine_lateral")) *
                         rx(angle(left, "spine_flex"));
  const Vector3d spine = b.at("pelvis_spine") * (trunk * kUp);
  const Vector3d thorax = spine + b.at("spine_thorax") * (trunk * kUp);
  const Vector3d neck = thorax + b.at("thorax_neck") * (trunk * kUp);
  const Vector3d head = neck + b.at("neck_head") * (trunk * rx(angle(left, "neck_flex")) * kUp);
  put("spine", spine);
  put("thorax", thorax);
  put("neck", neck);
  put("head", head);

  auto arm = [&](const std::map<std::string, double>& a, double side, const char* shoulder,
                 const char* elbow, const char* wrist) {
    const Vector3d sh = thorax + b.at("shoulder_half_width") * (trunk * Vector3d(side, 0.0, 0.0));
    const Matrix3d r_sh =
        trunk * rx(-angle(a, "shoulder_flex")) * rz(side * angle(a, "shoulder_abduct"));
    const Vector3d el = sh + b.at("upper_arm") * (r_sh * kDown);
    const Vector3d wr = el + b.at("forearm") * (r_sh * rx(-angle(a, "elbow_flex")) * kDown);
    put(shoulder, sh);
    put(elbow, el);
    put(wrist, wr);
  };
  arm(left, 1.0, "left_shoulder", "left_elbow", "left_wrist");
  arm(right, -1.0, "right_shoulder", "right_elbow", "right_wrist");
  return pose;
}

std::vector<PoseRecord> synthesize(const SynthConfig& config, const Schema& schema) {
  config.validate();
  Rng rng(derive_seed(config.seed, 0));
  std::vector<PoseRecord> out;
  out.reserve(config.count);
  const int width = static_cast<int>(std::to_string(config.count).size());
  for (std::size_t i = 0; i < config.count; ++i) {
    std::map<std::string, double> left, right;
    for (const auto& name : kAngles) {
      const AngleRange& r = config.angles.at(name);
      left[name] = rng.uniform(r.lo, r.hi);
      right[name] = kSided.count(name) ? rng.uniform(r.lo, r.hi) : left[name];
    }
    const Matrix body = forward_kinematics(config, schema, left, right);
    const double az = rng.uniform(config.azimuth.lo, config.azimuth.hi);
    const double el = rng.uniform(config.elevation.lo, config.elevation.hi);
    const Matrix cam = body * RotationMatrix::from_angles(az, el).matrix().transpose();

    PoseRecord r;
    std::string num = std::to_string(i);
    r.id = "synth_" + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num;
    r.action = "synthetic";
    const double turn = (az + std::numbers::pi) / (2.0 * std::numbers::pi);
    r.camera = "az" + std::to_string(std::min(3, static_cast<int>(turn * 4.0)));
    r.units = "mm";
    r.keypoints2d = cam.leftCols(2);
    r.keypoints3d = cam;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace liftpose
