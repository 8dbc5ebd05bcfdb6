#include "eccnn/parameter.hpp"

#include <algorithm>

#include "eccnn/errors.hpp"

ECCNN_BEGIN_NAMESPACE

Parameter Parameter::zeros(Shape shape) {
  return from_data(shape, std::vector<Real>(shape.numel(), Real(0)));
}

Parameter Parameter::from_data(Shape shape, std::vector<Real> data) {
  Parameter p;
  p.state_ = std::make_shared<State>();
  p.state_->value = Tensor::from_data(shape, std::move(data), true);
  p.state_->momentum.assign(shape.numel(), Real(0));
  return p;
}

void sgd_step(std::span<Parameter> params, const SgdOptions& options) {
  for (const auto& p : params) {
    if (!p.value().has_grad()) {
      throw ValidationError("sgd_step: parameter of shape " + p.shape().str() +
                            " has no gradient");
    }
  }
  for (auto& p : params) {
    auto values = p.data();
    auto grad = p.value().grad();
    auto& buf = p.momentum();
    for (std::size_t i = 0; i < values.size(); ++i) {
      buf[i] = options.momentum * buf[i] + grad[i] + options.weight_decay * values[i];
      values[i] -= options.lr * buf[i];
    }
    p.value().clear_grad();
  }
}

void reset_momentum(std::span<Parameter> params) {
  for (auto& p : params) std::fill(p.momentum().begin(), p.momentum().end(), Real(0));
}

ECCNN_END_NAMESPACE
