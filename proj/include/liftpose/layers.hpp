#pragma once

#include <cstddef>
#include <string>

#include "liftpose/matrix.hpp"
#include "liftpose/param_store.hpp"
#include "liftpose/rng.hpp"
#include "liftpose/tape.hpp"

namespace liftpose {

enum class Mode { Train, Infer };

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

/// Places the parameters of one store on a tape, either as gradient-tracked
/// leaves or as constants (frozen networks and pure inference).
class ParamBinder {
 public:
  ParamBinder(Tape& tape, ParamStore& store, bool track = true)
      : tape_(tape), mutable_store_(&store), store_(&store), track_(track) {}
  ParamBinder(Tape& tape, const ParamStore& store)
      : tape_(tape), mutable_store_(nullptr), store_(&store), track_(false) {}

  Var get(const std::string& name);
  Tape& tape() { return tape_; }
  const ParamStore& store() const { return *store_; }
  /// Null when the store was bound read-only.
  ParamStore* mutable_store() { return mutable_store_; }

 private:
  Tape& tape_;
  ParamStore* mutable_store_;
  const ParamStore* store_;
  bool track_;
};

/// input * weight + bias, bias broadcast over rows.
Matrix linear_forward(const Matrix& input, const Matrix& weight, const Matrix& bias);

/// Adds `<prefix>.weight` (in x out) and `<prefix>.bias` with uniform fan-in
/// scaled initialization and zero bias.
void init_linear(ParamStore& store, const std::string& prefix, int in, int out, Rng& rng);
/// Adds gamma/beta (trainable) and running mean/var (buffers).
void init_batch_norm(ParamStore& store, const std::string& prefix, int features);
/// Adds the parameters of a residual block of the given width.
void init_residual_block(ParamStore& store, const std::string& prefix, int width, Rng& rng);

Var linear(ParamBinder& params, const std::string& prefix, Var x);
/// Training mode uses batch statistics and updates the running averages
/// (when the store is mutable); inference mode uses the running averages.
Var batch_norm(ParamBinder& params, const std::string& prefix, Var x, Mode mode);
/// Inverted dropout. Identity in inference mode or when p == 0.
Var dropout(Var x, double p, Mode mode, Rng* rng);

/// x + f(x) where f = [linear, batch-norm, relu, dropout] applied twice.
Var residual_block_forward(ParamBinder& params, const std::string& prefix, Var x, Mode mode,
                           double dropout_p, Rng* rng);

struct MlpSpec {
  int input = 0;
  int width = 0;
  int blocks = 0;
  int output = 0;
  double dropout = 0.1;

  bool operator==(const MlpSpec&) const = default;
};

/// Exact trainable parameter count of a ResidualMlp with this spec.
std::size_t mlp_parameter_count(const MlpSpec& spec);

/// Fully connected residual network:
/// linear -> batch-norm -> relu -> dropout, `blocks` residual blocks, linear head.
class ResidualMlp {
 public:
  ResidualMlp() = default;
  ResidualMlp(const MlpSpec& spec, Rng& init_rng);

  const MlpSpec& spec() const { return spec_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  std::size_t parameter_count() const { return params_.trainable_count(); }

  /// With track_params = false the parameters enter the tape as constants, so
  /// no gradient is reported for them (running statistics still update in
  /// training mode).
  Var forward(Tape& tape, Var x, Mode mode, Rng* dropout_rng, bool track_params = true);
  /// Pure inference pass.
  Matrix infer(const Matrix& x) const;

 private:
  Var forward_impl(ParamBinder& binder, Var x, Mode mode, Rng* dropout_rng) const;

  MlpSpec spec_;
  ParamStore params_;
};

}  // namespace liftpose
