#include "liftpose/adam.hpp"

#include <cmath>

#include "liftpose/errors.hpp"

namespace liftpose {

void adam_step(ParamStore& params, const Gradients& grads, const AdamConfig& config) {
  std::size_t trainable = 0;
  for (const auto& [name, p] : params.entries()) {
    if (!p.trainable) continue;
    ++trainable;
    auto it = grads.find(name);
    if (it == grads.end()) throw ContractError("missing gradient for parameter '" + name + "'");
    const Matrix& g = it->second;
    if (g.rows() != p.value.rows() || g.cols() != p.value.cols()) {
      throw DimensionError("gradient shape mismatch for parameter '" + name + "'");
    }
    if (!g.allFinite()) {
      throw DivergenceError("non-finite gradient for parameter '" + name + "' at step " +
                            std::to_string(params.step() + 1) + " (max |g| = " +
                            std::to_string(g.cwiseAbs().maxCoeff()) + ")");
    }
  }
  if (grads.size() != trainable) {
    throw ContractError("gradient map has entries that are not trainable parameters");
  }

  const std::int64_t step = params.step() + 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
  for (auto& [name, p] : params.entries()) {
    if (!p.trainable) continue;
    const Matrix& g = grads.at(name);
    p.m = config.beta1 * p.m + (1.0 - config.beta1) * g;
    p.v = config.beta2 * p.v + (1.0 - config.beta2) * g.cwiseProduct(g);
    const double step_size = config.lr / bc1;
    p.value.array() -= step_size * p.m.array() / ((p.v.array() / bc2).sqrt() + config.eps);
  }
  params.set_step(step);
}

}  // namespace liftpose
