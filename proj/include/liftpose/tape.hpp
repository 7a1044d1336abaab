#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "liftpose/matrix.hpp"
#include "liftpose/param_store.hpp"

namespace liftpose {

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode gradient recorder.
///
/// Nodes are appended in evaluation order and backward() visits each one once,
/// in reverse.
class Tape {
 public:
  /// Receives the gradient flowing into the node and pushes contributions to
  /// its parents through Tape::accumulate.
  using BackwardFn = std::function<void(const Matrix& grad_out, Tape& tape)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf bound to `store[name]`; its gradient is reported by gradients().
  Var parameter(ParamStore& store, const std::string& name);
  Var record(Matrix value, const std::vector<std::size_t>& parents, BackwardFn backward);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  void accumulate(std::size_t id, const Matrix& grad);

  /// Seeds d(loss)/d(loss) = 1 and propagates to every recorded node.
  /// Gradients from earlier calls are cleared first.
  void backward(Var loss);

  /// Gradient of the last backward() w.r.t. `v`; zeros if `v` was not reached.
  Matrix grad(Var v) const;

  /// Gradients for every trainable parameter of `store`. Parameters that were
  /// never placed on the tape, or not reached by backward(), get zeros.
  Gradients gradients(const ParamStore& store) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    const ParamStore* owner = nullptr;
    std::string name;
    bool requires_grad = false;
  };

  std::deque<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

}  // namespace liftpose
