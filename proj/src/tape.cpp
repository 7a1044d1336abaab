#include "liftpose/tape.hpp"

#include "liftpose/errors.hpp"

namespace liftpose {

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ContractError("scalar() on a non-scalar node");
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(ParamStore& store, const std::string& name) {
  Node node;
  node.value = store.value(name);
  node.owner = &store;
  node.name = name;
  node.requires_grad = store.at(name).trainable;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, const std::vector<std::size_t>& parents, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (std::size_t p : parents) {
    if (nodes_[p].requires_grad) {
      node.requires_grad = true;
      break;
    }
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t id, const Matrix& grad) {
  Node& node = nodes_[id];
  if (!node.requires_grad) return;
  if (grad.rows() != node.value.rows() || grad.cols() != node.value.cols()) {
    throw DimensionError("gradient shape does not match node value");
  }
  if (node.grad.size() == 0) {
    node.grad = grad;
  } else {
    node.grad += grad;
  }
}

void Tape::backward(Var loss) {
  if (loss.valid() && &loss.tape() != this) throw ContractError("loss belongs to another tape");
  const Matrix& v = nodes_[loss.id()].value;
  if (v.rows() != 1 || v.cols() != 1) {
    throw ContractError("backward() requires a scalar loss, got " + std::to_string(v.rows()) +
                        "x" + std::to_string(v.cols()));
  }
  for (Node& node : nodes_) node.grad.resize(0, 0);
  if (!nodes_[loss.id()].requires_grad) return;
  nodes_[loss.id()].grad = Matrix::Ones(1, 1);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.grad.size() == 0 || !node.backward) continue;
    node.backward(node.grad, *this);
  }
}

Matrix Tape::grad(Var v) const {
  const Node& node = nodes_[v.id()];
  if (node.grad.size() == 0) return Matrix::Zero(node.value.rows(), node.value.cols());
  return node.grad;
}

Gradients Tape::gradients(const ParamStore& store) const {
  Gradients grads = store.zero_gradients();
  for (const Node& node : nodes_) {
    if (node.owner != &store || node.grad.size() == 0) continue;
    auto it = grads.find(node.name);
    if (it != grads.end()) it->second += node.grad;
  }
  return grads;
}

}  // namespace liftpose
