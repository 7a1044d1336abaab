#include "liftpose/losses.hpp"

#include <cmath>
#include <string>

#include "liftpose/errors.hpp"
#include "liftpose/ops.hpp"

namespace liftpose {
namespace {

Vector coef(const Matrix& table, int r, int c) { return table.col(3 * r + c); }

Var rotate_component(const Matrix& table, int row, Var a, Var b, Var c, bool transpose) {
  auto k = [&](int j) { return transpose ? coef(table, j, row) : coef(table, row, j); };
  return ops::add(ops::add(ops::row_scale(a, k(0)), ops::row_scale(b, k(1))),
                  ops::row_scale(c, k(2)));
}

Var hip_midpoint(Var m, int left_hip, int right_hip) {
  return ops::scale(ops::add(ops::gather_cols(m, {left_hip}), ops::gather_cols(m, {right_hip})),
                    0.5);
}

void require_joints(const std::vector<int>& joints) {
  if (joints.empty()) throw ContractError("loss mask selects no joints");
}

}  // namespace

void LossWeights::validate() const {
  auto check = [](double w, const char* name) {
    if (!std::isfinite(w) || w < 0.0) {
      throw ConfigError(std::string("loss weight ") + name + " must be finite and >= 0");
    }
  };
  check(adversarial, "w1 (adversarial)");
  check(reprojection, "w2 (reprojection)");
  check(ninety, "w3 (ninety)");
  for (double w : group_adversarial) check(w, "per-network adversarial");
}

double LossWeights::adversarial_for(std::size_t group) const {
  if (group_adversarial.empty()) return adversarial;
  if (group >= group_adversarial.size()) {
    throw ConfigError("per-network adversarial weights: no entry for network " +
                      std::to_string(group));
  }
  return group_adversarial[group];
}

Matrix rotation_table(const std::vector<RotationMatrix>& rotations) {
  Matrix table(static_cast<Eigen::Index>(rotations.size()), 9);
  for (std::size_t i = 0; i < rotations.size(); ++i) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) table(static_cast<Eigen::Index>(i), 3 * r + c) = rotations[i](r, c);
    }
  }
  return table;
}

CycleVars consistency_cycle(const BatchLiftFn& lift, Var x, Var y, const Matrix& rotations,
                            const CycleOptions& options) {
  if (rotations.rows() != x.rows() || rotations.cols() != 9) {
    throw DimensionError("consistency cycle needs one rotation per pose");
  }
  CycleVars c;
  c.depth = lift(x, y);
  c.x_rot = rotate_component(rotations, 0, x, y, c.depth, false);
  c.y_rot = rotate_component(rotations, 1, x, y, c.depth, false);

  if (options.renormalize) {
    if (options.left_hip < 0 || options.right_hip < 0) {
      throw ContractError("renormalized cycle needs the hip indices");
    }
    Var root_x = hip_midpoint(c.x_rot, options.left_hip, options.right_hip);
    Var root_y = hip_midpoint(c.y_rot, options.left_hip, options.right_hip);
    Var xc = ops::sub_col(c.x_rot, root_x);
    Var yc = ops::sub_col(c.y_rot, root_y);
    Var s = ops::row_max_abs(ops::concat_cols({xc, yc}));
    c.x_fake = ops::div_col(xc, s);
    c.y_fake = ops::div_col(yc, s);
    Var d = lift(c.x_fake, c.y_fake);
    Var root_depth = ops::row_scale(hip_midpoint(c.depth, options.left_hip, options.right_hip),
                                    coef(rotations, 2, 2));
    c.depth_rot = ops::sub_col(ops::mul_col(d, s), ops::neg(root_depth));
  } else {
    c.depth_rot = lift(c.x_rot, c.y_rot);
    c.x_fake = c.x_rot;
    c.y_fake = c.y_rot;
  }
  c.x_back = rotate_component(rotations, 0, c.x_rot, c.y_rot, c.depth_rot, true);
  c.y_back = rotate_component(rotations, 1, c.x_rot, c.y_rot, c.depth_rot, true);
  return c;
}

Var reprojection_loss(Var x, Var y, Var x_back, Var y_back, const std::vector<int>& joints) {
  require_joints(joints);
  Var dx = ops::gather_cols(ops::sub(x, x_back), joints);
  Var dy = ops::gather_cols(ops::sub(y, y_back), joints);
  return ops::add(ops::mean_row_sum_squares(dx), ops::mean_row_sum_squares(dy));
}

double reprojection_loss(const Pose2D& original, const Pose2D& recovered,
                         const std::vector<int>& joints) {
  require_joints(joints);
  if (original.coords.rows() != recovered.coords.rows() ||
      original.coords.cols() != recovered.coords.cols()) {
    throw DimensionError("reprojection loss: pose shapes differ");
  }
  double total = 0.0;
  for (int j : joints) total += (original.coords.row(j) - recovered.coords.row(j)).squaredNorm();
  return total;
}

NinetyResiduals ninety_degree_residuals(const BatchLiftFn& lift, Var x, Var y, Var depth) {
  NinetyResiduals r;
  r.clockwise = ops::add(lift(depth, y), x);
  r.anticlockwise = ops::sub(lift(ops::neg(depth), y), x);
  r.half_turn = ops::add(depth, lift(ops::neg(x), y));
  return r;
}

Var ninety_degree_loss(const NinetyResiduals& r, const std::vector<int>& joints) {
  require_joints(joints);
  Var a = ops::mean_row_sum_squares(ops::gather_cols(r.clockwise, joints));
  Var b = ops::mean_row_sum_squares(ops::gather_cols(r.anticlockwise, joints));
  Var c = ops::mean_row_sum_squares(ops::gather_cols(r.half_turn, joints));
  return ops::add(ops::add(a, b), c);
}

Var ninety_degree_loss(const BatchLiftFn& lift, Var x, Var y, Var depth,
                       const std::vector<int>& joints) {
  return ninety_degree_loss(ninety_degree_residuals(lift, x, y, depth), joints);
}

double ninety_degree_loss(const DepthFn& lift, const Pose2D& pose, const Vector& depth,
                          const std::vector<int>& joints) {
  require_joints(joints);
  const Vector x = pose.coords.col(0);
  const Vector y = pose.coords.col(1);
  auto lift_xy = [&](const Vector& a, const Vector& b) {
    Pose2D p{Matrix(pose.coords.rows(), 2), pose.scale};
    p.coords.col(0) = a;
    p.coords.col(1) = b;
    return lift(p);
  };
  const Vector cw = lift_xy(depth, y) + x;
  const Vector acw = lift_xy(-depth, y) - x;
  const Vector half = depth + lift_xy(-x, y);
  double total = 0.0;
  for (int j : joints) total += cw(j) * cw(j) + acw(j) * acw(j) + half(j) * half(j);
  return total;
}

Var lsgan_discriminator_loss(Var real_scores, Var fake_scores, bool flip) {
  if (real_scores.rows() == 0 || fake_scores.rows() == 0) {
    throw ContractError("adversarial loss on an empty batch");
  }
  const double real_target = flip ? 0.0 : 1.0;
  const double fake_target = flip ? 1.0 : 0.0;
  Var real_term = ops::scale(ops::mean_row_sum_squares(ops::add_scalar(real_scores, -real_target)), 0.5);
  Var fake_term = ops::scale(ops::mean_row_sum_squares(ops::add_scalar(fake_scores, -fake_target)), 0.5);
  return ops::add(real_term, fake_term);
}

Var lsgan_generator_loss(Var fake_scores) {
  if (fake_scores.rows() == 0) throw ContractError("adversarial loss on an empty batch");
  return ops::scale(ops::mean_row_sum_squares(ops::add_scalar(fake_scores, -1.0)), 0.5);
}

LsganLosses lsgan_losses(const Matrix& real_scores, const Matrix& fake_scores, bool flip) {
  Tape tape;
  Var real = tape.constant(real_scores);
  Var fake = tape.constant(fake_scores);
  LsganLosses out;
  out.d_loss = lsgan_discriminator_loss(real, fake, flip).scalar();
  out.g_loss = lsgan_generator_loss(fake).scalar();
  out.flipped = flip;
  return out;
}

LsganLosses lsgan_losses(const Discriminator& d, const Matrix& real_x, const Matrix& real_y,
                         const Matrix& fake_x, const Matrix& fake_y, Rng& flip_rng,
                         double flip_probability) {
  const bool flip = draw_label_flip(flip_rng, flip_probability);
  return lsgan_losses(d.score(real_x, real_y), d.score(fake_x, fake_y), flip);
}

bool draw_label_flip(Rng& rng, double probability) {
  if (!(probability >= 0.0 && probability <= 1.0)) {
    throw ConfigError("label flip probability must be in [0, 1]");
  }
  return rng.bernoulli(probability);
}

double total_generator_loss(double adv, double l2d, double l90, const LossWeights& weights) {
  weights.validate();
  return weights.adversarial * adv + weights.reprojection * l2d + weights.ninety * l90;
}

Var total_generator_loss(Var adv, Var l2d, Var l90, const LossWeights& weights) {
  weights.validate();
  return ops::add(ops::add(ops::scale(adv, weights.adversarial), ops::scale(l2d, weights.reprojection)),
                  ops::scale(l90, weights.ninety));
}

}  // namespace liftpose
