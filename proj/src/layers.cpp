#include "liftpose/layers.hpp"

#include <cmath>

#include "liftpose/errors.hpp"
#include "liftpose/ops.hpp"

namespace liftpose {

Var ParamBinder::get(const std::string& name) {
  if (track_ && mutable_store_ != nullptr) return tape_.parameter(*mutable_store_, name);
  return tape_.constant(store_->value(name));
}

Matrix linear_forward(const Matrix& input, const Matrix& weight, const Matrix& bias) {
  if (input.cols() != weight.rows()) {
    throw DimensionError("linear: input has " + std::to_string(input.cols()) +
                         " features, weight expects " + std::to_string(weight.rows()));
  }
  if (bias.rows() != 1 || bias.cols() != weight.cols()) {
    throw DimensionError("linear: bias does not match output width");
  }
  Matrix out = input * weight;
  out.rowwise() += bias.row(0);
  return out;
}

void init_linear(ParamStore& store, const std::string& prefix, int in, int out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in));
  Matrix w(in, out);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
  store.add(prefix + ".weight", std::move(w));
  store.add(prefix + ".bias", Matrix::Zero(1, out));
}

void init_batch_norm(ParamStore& store, const std::string& prefix, int features) {
  store.add(prefix + ".gamma", Matrix::Ones(1, features));
  store.add(prefix + ".beta", Matrix::Zero(1, features));
  store.add(prefix + ".running_mean", Matrix::Zero(1, features), false);
  store.add(prefix + ".running_var", Matrix::Ones(1, features), false);
}

void init_residual_block(ParamStore& store, const std::string& prefix, int width, Rng& rng) {
  init_linear(store, prefix + ".fc1", width, width, rng);
  init_batch_norm(store, prefix + ".bn1", width);
  init_linear(store, prefix + ".fc2", width, width, rng);
  init_batch_norm(store, prefix + ".bn2", width);
}

Var linear(ParamBinder& params, const std::string& prefix, Var x) {
  const Matrix& w = params.store().value(prefix + ".weight");
  if (x.cols() != w.rows()) {
    throw DimensionError("linear '" + prefix + "': input has " + std::to_string(x.cols()) +
                         " features, expected " + std::to_string(w.rows()));
  }
  Var weight = params.get(prefix + ".weight");
  Var bias = params.get(prefix + ".bias");
  return ops::add_row(ops::matmul(x, weight), bias);
}

Var batch_norm(ParamBinder& params, const std::string& prefix, Var x, Mode mode) {
  Var gamma = params.get(prefix + ".gamma");
  Var beta = params.get(prefix + ".beta");
  if (mode == Mode::Infer) {
    const ParamStore& s = params.store();
    return ops::batch_norm_infer(x, gamma, beta, s.value(prefix + ".running_mean"),
                                 s.value(prefix + ".running_var"), kBatchNormEps);
  }
  RowVector mean, var;
  Var out = ops::batch_norm_train(x, gamma, beta, kBatchNormEps, &mean, &var);
  if (ParamStore* s = params.mutable_store()) {
    const double n = static_cast<double>(x.rows());
    Matrix& rm = s->value(prefix + ".running_mean");
    Matrix& rv = s->value(prefix + ".running_var");
    rm = (1.0 - kBatchNormMomentum) * rm + kBatchNormMomentum * mean;
    rv = (1.0 - kBatchNormMomentum) * rv + kBatchNormMomentum * (var * (n / (n - 1.0)));
  }
  return out;
}

Var dropout(Var x, double p, Mode mode, Rng* rng) {
  if (mode == Mode::Infer || p <= 0.0) return x;
  if (p >= 1.0) throw ConfigError("dropout probability must be below 1");
  if (rng == nullptr) throw ContractError("dropout in training mode needs a random stream");
  const double keep_scale = 1.0 / (1.0 - p);
  Matrix mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = rng->bernoulli(p) ? 0.0 : keep_scale;
  }
  return ops::mul_const(x, mask);
}

Var residual_block_forward(ParamBinder& params, const std::string& prefix, Var x, Mode mode,
                           double dropout_p, Rng* rng) {
  const Matrix& w1 = params.store().value(prefix + ".fc1.weight");
  if (x.cols() != w1.rows()) {
    throw DimensionError("residual block '" + prefix + "' has width " +
                         std::to_string(w1.rows()) + ", input has " + std::to_string(x.cols()));
  }
  Var h = linear(params, prefix + ".fc1", x);
  h = dropout(ops::relu(batch_norm(params, prefix + ".bn1", h, mode)), dropout_p, mode, rng);
  h = linear(params, prefix + ".fc2", h);
  h = dropout(ops::relu(batch_norm(params, prefix + ".bn2", h, mode)), dropout_p, mode, rng);
  return ops::add(x, h);
}

std::size_t mlp_parameter_count(const MlpSpec& spec) {
  const std::size_t in = spec.input, w = spec.width, out = spec.output;
  const std::size_t stem = in * w + w + 2 * w;
  const std::size_t block = 2 * (w * w + w) + 2 * (2 * w);
  const std::size_t head = w * out + out;
  return stem + static_cast<std::size_t>(spec.blocks) * block + head;
}

ResidualMlp::ResidualMlp(const MlpSpec& spec, Rng& init_rng) : spec_(spec) {
  if (spec.input <= 0 || spec.width <= 0 || spec.output <= 0 || spec.blocks < 0) {
    throw ConfigError("residual network dimensions must be positive");
  }
  if (spec.dropout < 0.0 || spec.dropout >= 1.0) {
    throw ConfigError("dropout probability must be in [0, 1)");
  }
  init_linear(params_, "stem.fc", spec.input, spec.width, init_rng);
  init_batch_norm(params_, "stem.bn", spec.width);
  for (int b = 0; b < spec.blocks; ++b) {
    init_residual_block(params_, "block" + std::to_string(b), spec.width, init_rng);
  }
  init_linear(params_, "head", spec.width, spec.output, init_rng);
}

Var ResidualMlp::forward_impl(ParamBinder& binder, Var x, Mode mode, Rng* dropout_rng) const {
  if (x.cols() != spec_.input) {
    throw DimensionError("network expects " + std::to_string(spec_.input) + " inputs, got " +
                         std::to_string(x.cols()));
  }
  Var h = linear(binder, "stem.fc", x);
  h = dropout(ops::relu(batch_norm(binder, "stem.bn", h, mode)), spec_.dropout, mode, dropout_rng);
  for (int b = 0; b < spec_.blocks; ++b) {
    h = residual_block_forward(binder, "block" + std::to_string(b), h, mode, spec_.dropout,
                               dropout_rng);
  }
  return linear(binder, "head", h);
}

Var ResidualMlp::forward(Tape& tape, Var x, Mode mode, Rng* dropout_rng, bool track_params) {
  ParamBinder binder(tape, params_, track_params);
  return forward_impl(binder, x, mode, dropout_rng);
}

Matrix ResidualMlp::infer(const Matrix& x) const {
  Tape tape;
  ParamBinder binder(tape, params_);
  return forward_impl(binder, tape.constant(x), Mode::Infer, nullptr).value();
}

}  // namespace liftpose
