#pragma once

#include "liftpose/param_store.hpp"

namespace liftpose {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update of every trainable parameter in `params`.
///
/// `grads` must hold exactly the trainable parameter names. A non-finite
/// gradient raises DivergenceError naming the parameter; nothing is updated in
/// that case.
void adam_step(ParamStore& params, const Gradients& grads, const AdamConfig& config);

}  // namespace liftpose
