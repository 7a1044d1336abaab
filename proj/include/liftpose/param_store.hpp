#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>

#include "liftpose/matrix.hpp"

namespace liftpose {

/// One named tensor with its Adam moment buffers.
///
/// Non-trainable entries (batch-norm running statistics) live in the same
/// store and are checkpointed; Adam and parameter counts skip them.
struct Parameter {
  Matrix value;
  Matrix m;
  Matrix v;
  bool trainable = true;
};

using Gradients = std::map<std::string, Matrix>;

class ParamStore {
 public:
  Matrix& add(const std::string& name, Matrix init, bool trainable = true);

  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  Matrix& value(const std::string& name) { return at(name).value; }
  const Matrix& value(const std::string& name) const { return at(name).value; }

  /// Number of trainable scalars.
  std::size_t trainable_count() const;

  std::int64_t step() const { return step_; }
  void set_step(std::int64_t step) { step_ = step; }

  std::map<std::string, Parameter>& entries() { return params_; }
  const std::map<std::string, Parameter>& entries() const { return params_; }

  /// Zero-filled gradient map covering every trainable parameter.
  Gradients zero_gradients() const;

  bool operator==(const ParamStore& other) const;

 private:
  std::map<std::string, Parameter> params_;
  std::int64_t step_ = 0;
};

}  // namespace liftpose
