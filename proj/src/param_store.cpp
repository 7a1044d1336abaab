#include "liftpose/param_store.hpp"

#include "liftpose/errors.hpp"

namespace liftpose {

Matrix& ParamStore::add(const std::string& name, Matrix init, bool trainable) {
  if (contains(name)) throw ContractError("duplicate parameter '" + name + "'");
  Parameter p;
  p.m = Matrix::Zero(init.rows(), init.cols());
  p.v = Matrix::Zero(init.rows(), init.cols());
  p.value = std::move(init);
  p.trainable = trainable;
  return params_.emplace(name, std::move(p)).first->second.value;
}

Parameter& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

const Parameter& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParamStore::trainable_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) {
    if (p.trainable) n += static_cast<std::size_t>(p.value.size());
  }
  return n;
}

Gradients ParamStore::zero_gradients() const {
  Gradients grads;
  for (const auto& [name, p] : params_) {
    if (p.trainable) grads.emplace(name, Matrix::Zero(p.value.rows(), p.value.cols()));
  }
  return grads;
}

bool ParamStore::operator==(const ParamStore& other) const {
  if (step_ != other.step_ || params_.size() != other.params_.size()) return false;
  auto it = other.params_.begin();
  for (const auto& [name, p] : params_) {
    const auto& [oname, op] = *it++;
    if (name != oname || p.trainable != op.trainable) return false;
    if (p.value.rows() != op.value.rows() || p.value.cols() != op.value.cols()) return false;
    if (p.value != op.value || p.m != op.m || p.v != op.v) return false;
  }
  return true;
}

}  // namespace liftpose
