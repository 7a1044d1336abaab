#pragma once

#include <functional>
#include <vector>

#include "liftpose/geometry.hpp"
#include "liftpose/models.hpp"
#include "liftpose/rng.hpp"
#include "liftpose/tape.hpp"

namespace liftpose {

/// Relative weights of the generator objective.
struct LossWeights {
  double adversarial = 1.0;
  double reprojection = 1.0;
  double ninety = 1.0;
  /// Optional adversarial weight per loss group (independent variants); when
  /// empty every group uses `adversarial`.
  std::vector<double> group_adversarial;

  /// Throws ConfigError for negative or non-finite weights.
  void validate() const;
  double adversarial_for(std::size_t group) const;

  bool operator==(const LossWeights&) const = default;
};

/// Differentiable batched lifter: (x, y) B x N -> depth B x N.
using BatchLiftFn = std::function<Var(Var x, Var y)>;

/// Per-sample rotation coefficients (B x 9, row-major R entries).
Matrix rotation_table(const std::vector<RotationMatrix>& rotations);

struct CycleVars {
  Var depth;                 ///< z = G(x, y)
  Var x_rot, y_rot;          ///< P R [x, y, z]
  Var depth_rot;             ///< G(x_rot, y_rot)
  Var x_back, y_back;        ///< P R^-1 [x_rot, y_rot, depth_rot]
  Var x_fake, y_fake;        ///< reprojected pose as shown to the discriminator
};

/// Options for the reprojection cycle. With `renormalize`, the reprojected
/// pose is re-centered and max-normalized before the second lift and the
/// prediction is mapped back.
struct CycleOptions {
  bool renormalize = false;
  int left_hip = -1;
  int right_hip = -1;
};

CycleVars consistency_cycle(const BatchLiftFn& lift, Var x, Var y, const Matrix& rotations,
                            const CycleOptions& options = {});

/// Mean over the batch of the squared distance between the original and the
/// recovered 2D pose, restricted to `joints`.
Var reprojection_loss(Var x, Var y, Var x_back, Var y_back, const std::vector<int>& joints);
double reprojection_loss(const Pose2D& original, const Pose2D& recovered,
                         const std::vector<int>& joints);

/// Residuals of the three quarter-turn constraints:
/// clockwise G(z, y) + x, anticlockwise G(-z, y) - x, half turn G(x, y) + G(-x, y).
struct NinetyResiduals {
  Var clockwise;
  Var anticlockwise;
  Var half_turn;
};
NinetyResiduals ninety_degree_residuals(const BatchLiftFn& lift, Var x, Var y, Var depth);
/// Sum of the three masked squared residual terms, averaged over the batch.
Var ninety_degree_loss(const NinetyResiduals& r, const std::vector<int>& joints);
Var ninety_degree_loss(const BatchLiftFn& lift, Var x, Var y, Var depth,
                       const std::vector<int>& joints);
double ninety_degree_loss(const DepthFn& lift, const Pose2D& pose, const Vector& depth,
                          const std::vector<int>& joints);

/// Least-squares GAN objectives. With `flip`, real and fake targets swap in
/// the discriminator loss.
Var lsgan_discriminator_loss(Var real_scores, Var fake_scores, bool flip);
Var lsgan_generator_loss(Var fake_scores);

struct LsganLosses {
  double d_loss = 0.0;
  double g_loss = 0.0;
  bool flipped = false;
};
LsganLosses lsgan_losses(const Matrix& real_scores, const Matrix& fake_scores, bool flip);
/// Scores both batches with `d` (inference mode) and draws the label flip.
LsganLosses lsgan_losses(const Discriminator& d, const Matrix& real_x, const Matrix& real_y,
                         const Matrix& fake_x, const Matrix& fake_y, Rng& flip_rng,
                         double flip_probability);
bool draw_label_flip(Rng& rng, double probability);

/// w1 * adv + w2 * l2d + w3 * l90. Throws ConfigError for negative weights.
double total_generator_loss(double adv, double l2d, double l90, const LossWeights& weights);
Var total_generator_loss(Var adv, Var l2d, Var l90, const LossWeights& weights);

}  // namespace liftpose
