#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eccnn/tensor.hpp"

ECCNN_BEGIN_NAMESPACE

// Trainable leaf tensor plus its momentum buffer. Copies share state, so a
// module and the optimizer see the same values.
class Parameter {
 public:
  Parameter() = default;
  static Parameter zeros(Shape shape);
  static Parameter from_data(Shape shape, std::vector<Real> data);

  bool defined() const { return state_ != nullptr; }
  const Tensor& value() const { return state_->value; }
  Tensor& value() { return state_->value; }
  const Shape& shape() const { return state_->value.shape(); }
  std::span<Real> data() { return state_->value.mutable_data(); }
  std::span<const Real> data() const { return state_->value.data(); }
  std::vector<Real>& momentum() { return state_->momentum; }
  const std::vector<Real>& momentum() const { return state_->momentum; }

 private:
  struct State {
    Tensor value;
    std::vector<Real> momentum;
  };
  std::shared_ptr<State> state_;
};

using NamedParameters = std::vector<std::pair<std::string, Parameter>>;

struct SgdOptions {
  Real lr = Real(0.001);
  Real momentum = Real(0.9);
  Real weight_decay = Real(0.0001);
};

// buffer <- momentum * buffer + grad + weight_decay * param
// param  <- param - lr * buffer
// Grads are cleared afterwards. Every parameter must carry a grad.
void sgd_step(std::span<Parameter> params, const SgdOptions& options);

// Zeroes momentum buffers (used when a new training stage starts).
void reset_momentum(std::span<Parameter> params);

ECCNN_END_NAMESPACE
