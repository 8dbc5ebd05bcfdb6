#include "eccnn/layers.hpp"

#include <cmath>

#include "eccnn/random.hpp"

ECCNN_BEGIN_NAMESPACE

std::vector<Real> he_normal(std::size_t count, int fan_in, std::uint64_t seed,
                            const std::string& name, double gain) {
  Rng rng(derive_seed(seed, name));
  const double std = gain * std::sqrt(2.0 / static_cast<double>(fan_in));
  std::vector<Real> v(count);
  for (auto& x : v) x = static_cast<Real>(std * rng.normal());
  return v;
}

ConvLayer ConvLayer::create(int in_channels, int out_channels, int kernel,
                            Conv2dOptions options, bool with_bias, std::uint64_t seed,
                            const std::string& name, double gain) {
  ConvLayer layer;
  const Shape ws{out_channels, in_channels, kernel, kernel};
  layer.weight = Parameter::from_data(
      ws, he_normal(ws.numel(), in_channels * kernel * kernel, seed, name + ".weight", gain));
  if (with_bias) layer.bias = Parameter::zeros(Shape{1, out_channels, 1, 1});
  layer.options = options;
  return layer;
}

Tensor ConvLayer::forward(const Tensor& x) const {
  return conv2d(x, weight.value(), bias.defined() ? bias.value() : Tensor{}, options);
}

void ConvLayer::collect(const std::string& prefix, NamedParameters& out) const {
  out.emplace_back(prefix + ".weight", weight);
  if (bias.defined()) out.emplace_back(prefix + ".bias", bias);
}

void ConvLayer::fill_zero() {
  for (auto& v : weight.data()) v = 0;
  if (bias.defined()) {
    for (auto& v : bias.data()) v = 0;
  }
}

BatchNormLayer BatchNormLayer::create(int channels) {
  BatchNormLayer bn;
  bn.scale = Parameter::from_data(Shape{1, channels, 1, 1},
                                  std::vector<Real>(channels, Real(1)));
  bn.shift = Parameter::zeros(Shape{1, channels, 1, 1});
  bn.stats = std::make_shared<RunningStats>();
  return bn;
}

Tensor BatchNormLayer::forward(const Tensor& x, Mode mode) const {
  return batch_norm(x, scale.value(), shift.value(), *stats, mode);
}

void BatchNormLayer::collect(const std::string& prefix, NamedParameters& out) const {
  out.emplace_back(prefix + ".scale", scale);
  out.emplace_back(prefix + ".shift", shift);
}

void BatchNormLayer::collect_buffers(const std::string& prefix, NamedBuffers& out) const {
  out.emplace_back(prefix, stats);
}

ECCNN_END_NAMESPACE
