#include "liftpose/probe.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "liftpose/errors.hpp"

namespace liftpose {
namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

std::vector<double> default_probe_grid() {
  std::vector<double> grid;
  for (int p = -95; p <= 105; ++p) grid.push_back(p / 100.0);
  return grid;
}

SensitivityTensor::SensitivityTensor(int k, std::vector<double> s)
    : keypoints(k), scales(std::move(s)), values(static_cast<std::size_t>(k) * scales.size() * k, 0.0) {}

double& SensitivityTensor::at(int k, std::size_t s, int o) {
  return values.at((static_cast<std::size_t>(k) * scales.size() + s) * keypoints + o);
}

double SensitivityTensor::at(int k, std::size_t s, int o) const {
  return values.at((static_cast<std::size_t>(k) * scales.size() + s) * keypoints + o);
}

SensitivityTensor probe_correlations(const LifterModel& lifter, const PoseSet& data,
                                     const ProbeOptions& options) {
  if (options.grid.empty()) throw ConfigError("probe grid is empty");
  if (data.size() == 0) throw ConfigError("probe dataset is empty");
  if (data.joints() != lifter.schema().size()) throw DimensionError("probe dataset does not match the model");

  Matrix x, y;
  if (options.aggregation == ProbeAggregation::SinglePose) {
    if (options.pose_index >= data.size()) throw ConfigError("probe pose index is out of range");
    const auto r = static_cast<Eigen::Index>(options.pose_index);
    x = data.x.row(r);
    y = data.y.row(r);
  } else {
    const auto rows = static_cast<Eigen::Index>(
        options.max_poses ? std::min(*options.max_poses, data.size()) : data.size());
    x = data.x.topRows(rows);
    y = data.y.topRows(rows);
  }
  const Matrix base = lifter.lift(x, y);
  const int n = data.joints();
  SensitivityTensor t(n, options.grid);
  for (int k = 0; k < n; ++k) {
    Matrix xp = x, yp = y;
    for (std::size_t s = 0; s < t.steps(); ++s) {
      xp.col(k) = x.col(k) * t.scales[s];
      yp.col(k) = y.col(k) * t.scales[s];
      const Matrix diff = lifter.lift(xp, yp) - base;
      for (int o = 0; o < n; ++o) {
        t.at(k, s, o) = options.aggregation == ProbeAggregation::SinglePose
                            ? diff(0, o)
                            : diff.col(o).cwiseAbs().mean();
      }
    }
  }
  return t;
}

double max_cross_segment(const SensitivityTensor& t, const Schema& schema, PartitionId partition) {
  std::vector<int> owner(static_cast<std::size_t>(schema.size()), -1);
  const auto& segs = schema.partition(partition);
  for (std::size_t g = 0; g < segs.size(); ++g) {
    for (int j : segs[g].joints) owner[static_cast<std::size_t>(j)] = static_cast<int>(g);
  }
  double worst = 0.0;
  for (int k = 0; k < t.keypoints; ++k) {
    for (int o = 0; o < t.keypoints; ++o) {
      if (owner[static_cast<std::size_t>(k)] == owner[static_cast<std::size_t>(o)]) continue;
      for (std::size_t s = 0; s < t.steps(); ++s) worst = std::max(worst, std::abs(t.at(k, s, o)));
    }
  }
  return worst;
}

std::string sensitivity_csv(const SensitivityTensor& t, const Schema& schema,
                            const std::string& config_hash) {
  std::string out = "# config_hash=" + config_hash + "\nkeypoint,scale,ordinate,deviation\n";
  for (int k = 0; k < t.keypoints; ++k) {
    for (std::size_t s = 0; s < t.steps(); ++s) {
      for (int o = 0; o < t.keypoints; ++o) {
        out += schema.name(k) + "," + fmt(t.scales[s]) + "," + schema.name(o) + "," +
               fmt(t.at(k, s, o)) + "\n";
      }
    }
  }
  return out;
}

void write_sensitivity(const std::filesystem::path& directory, const SensitivityTensor& t,
                       const Schema& schema, const std::string& config_hash) {
  std::filesystem::create_directories(directory / "curves");
  write_text(directory / "sensitivity.csv", sensitivity_csv(t, schema, config_hash));
  for (int k = 0; k < t.keypoints; ++k) {
    std::string text = "# config_hash=" + config_hash + "\n# perturbed=" + schema.name(k) + "\nscale";
    for (int o = 0; o < t.keypoints; ++o) text += "," + schema.name(o);
    text += "\n";
    for (std::size_t s = 0; s < t.steps(); ++s) {
      text += fmt(t.scales[s]);
      for (int o = 0; o < t.keypoints; ++o) text += "," + fmt(t.at(k, s, o));
      text += "\n";
    }
    write_text(directory / "curves" / (schema.name(k) + ".csv"), text);
  }
}

}  // namespace liftpose
