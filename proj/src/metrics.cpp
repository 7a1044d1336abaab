#include "liftpose/metrics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <Eigen/Dense>

#include "liftpose/errors.hpp"

namespace liftpose {
namespace {

void require_points(const Matrix& pred, const Matrix& gt) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) {
    throw DimensionError("prediction and ground truth shapes differ");
  }
  if (pred.rows() == 0) throw DimensionError("empty pose");
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream s;
  s << std::setprecision(precision) << std::fixed << v;
  return s.str();
}

}  // namespace

Pose3D upscale(const Pose3D& pred) {
  if (!(pred.scale > 0.0) || !std::isfinite(pred.scale)) {
    throw ContractError("upscale: pose has no valid normalizing factor");
  }
  return Pose3D{pred.coords * pred.scale, 1.0};
}

Matrix rigid_align(const Matrix& pred, const Matrix& gt, bool with_scale) {
  require_points(pred, gt);
  if (pred.cols() != 3) throw DimensionError("rigid_align expects N x 3 points");
  const Eigen::RowVector3d mu_p = pred.colwise().mean();
  const Eigen::RowVector3d mu_g = gt.colwise().mean();
  const Eigen::MatrixXd p0 = pred.rowwise() - mu_p;
  const Eigen::MatrixXd g0 = gt.rowwise() - mu_g;

  auto rank_ok = [](const Eigen::MatrixXd& centered) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
    const auto& s = svd.singularValues();
    return s(0) > 0.0 && s(1) > 1e-9 * s(0);
  };
  if (!rank_ok(g0)) {
    throw AlignmentError("rigid alignment is undefined for collinear or coincident ground truth");
  }
  if (p0.squaredNorm() == 0.0) return mu_g.replicate(gt.rows(), 1);

  const Eigen::Matrix3d h = p0.transpose() * g0;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Eigen::Matrix3d r = svd.matrixV() * d * svd.matrixU().transpose();
  double s = 1.0;
  if (with_scale) {
    s = (svd.singularValues().asDiagonal() * d).trace() / p0.squaredNorm();
  }
  Matrix aligned = (s * p0 * r.transpose()).rowwise() + mu_g;
  return aligned;
}

Vector joint_errors(const Matrix& pred, const Matrix& gt) {
  require_points(pred, gt);
  return (pred - gt).rowwise().norm();
}

double mpjpe(const Matrix& pred, const Matrix& gt) { return joint_errors(pred, gt).mean(); }

std::vector<double> default_auc_grid() {
  std::vector<double> grid;
  for (int t = 0; t <= 150; t += 5) grid.push_back(static_cast<double>(t));
  return grid;
}

PckAuc pck3d_auc(const Matrix& errors, double threshold, const std::vector<double>& grid) {
  if (errors.size() == 0) throw ContractError("PCK3D needs at least one pose");
  if (grid.empty()) throw ContractError("AUC threshold grid is empty");
  const double n = static_cast<double>(errors.size());
  auto fraction_within = [&](double t) {
    return static_cast<double>((errors.array() <= t).count()) / n;
  };
  PckAuc out;
  out.pck = 100.0 * fraction_within(threshold);
  double acc = 0.0;
  for (double t : grid) acc += fraction_within(t);
  out.auc = acc / static_cast<double>(grid.size());
  return out;
}

MetricsReport evaluate_predictions(const Matrix& predictions, const PoseSet& data,
                                   const EvalOptions& options) {
  if (!data.has_ground_truth()) throw ContractError("evaluation needs 3D ground truth");
  const int n = data.joints();
  if (predictions.rows() != static_cast<Eigen::Index>(data.size()) || predictions.cols() != 3 * n) {
    throw DimensionError("prediction batch does not match the evaluation set");
  }
  MetricsReport report;
  report.count = data.size();
  report.ids = data.ids;
  report.actions = data.actions;
  Matrix errors(static_cast<Eigen::Index>(data.size()), n);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    Matrix pred(n, 3);
    for (int c = 0; c < 3; ++c) pred.col(c) = predictions.row(row).segment(c * n, n).transpose();
    const Matrix gt = data.ground_truth(i);
    const Matrix aligned = options.align ? rigid_align(pred, gt, options.with_scale) : pred;
    errors.row(row) = joint_errors(aligned, gt).transpose();
    report.per_pose.push_back(errors.row(row).mean());
  }
  double total = 0.0;
  for (double e : report.per_pose) total += e;
  report.mpjpe = total / static_cast<double>(report.per_pose.size());
  for (std::size_t i = 0; i < report.per_pose.size(); ++i) {
    const std::string& action = i < report.actions.size() ? report.actions[i] : std::string();
    if (action.empty()) continue;
    report.per_action[action] += report.per_pose[i];
    report.per_action_count[action] += 1;
  }
  for (auto& [action, sum] : report.per_action) {
    sum /= static_cast<double>(report.per_action_count[action]);
  }
  const PckAuc pa = pck3d_auc(errors, options.pck_threshold, options.auc_grid);
  report.pck3d = pa.pck;
  report.auc = pa.auc;
  return report;
}

MetricsReport evaluate(const LifterModel& lifter, const PoseSet& data, const EvalOptions& options) {
  if (data.size() == 0) throw ContractError("evaluation set is empty");
  const Matrix depth = lifter.lift(data.x, data.y);
  const int n = data.joints();
  Matrix pred(static_cast<Eigen::Index>(data.size()), 3 * n);
  pred << data.x, data.y, depth;
  pred = data.scale.asDiagonal() * pred;
  return evaluate_predictions(pred, data, options);
}

std::string format_report(const MetricsReport& report) {
  std::ostringstream out;
  out << "poses      " << report.count << "\n"
      << "MPJPE (mm) " << fmt(report.mpjpe, 3) << "\n"
      << "PCK3D (%)  " << fmt(report.pck3d, 2) << "\n"
      << "AUC        " << fmt(report.auc, 4) << "\n";
  if (!report.per_action.empty()) {
    out << "\naction               poses   MPJPE (mm)\n";
    for (const auto& [action, value] : report.per_action) {
      out << std::left << std::setw(20) << action << " " << std::right << std::setw(5)
          << report.per_action_count.at(action) << "   " << fmt(value, 3) << "\n";
    }
  }
  return out.str();
}

std::string report_csv(const MetricsReport& report, const std::string& config_hash) {
  std::ostringstream out;
  out << "# config_hash=" << config_hash << "\n";
  out << "scope,key,poses,mpjpe_mm,pck3d_pct,auc\n";
  out << "aggregate,all," << report.count << "," << fmt(report.mpjpe, 9) << ","
      << fmt(report.pck3d, 9) << "," << fmt(report.auc, 9) << "\n";
  for (const auto& [action, value] : report.per_action) {
    out << "action," << action << "," << report.per_action_count.at(action) << ","
        << fmt(value, 9) << ",,\n";
  }
  for (std::size_t i = 0; i < report.per_pose.size(); ++i) {
    out << "pose," << (i < report.ids.size() ? report.ids[i] : std::to_string(i)) << ",1,"
        << fmt(report.per_pose[i], 9) << ",,\n";
  }
  return out.str();
}

void write_report_csv(const std::filesystem::path& path, const MetricsReport& report,
                      const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write report: " + path.string());
  out << report_csv(report, config_hash);
}

}  // namespace liftpose
