#include "eccnn/conditioning.hpp"

#include <algorithm>

#include "eccnn/errors.hpp"

ECCNN_BEGIN_NAMESPACE

namespace {
// Branch weights start small so the layer begins close to the identity.
constexpr double kBranchGain = 0.1;
}  // namespace

Tensor film(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
  const Shape xs = x.shape();
  for (const Tensor* t : {&gamma, &beta}) {
    const Shape s = t->shape();
    if (s.c != xs.c || s.h != 1 || s.w != 1 || (s.n != 1 && s.n != xs.n)) {
      throw ShapeError("film: expected per-channel vector of length " + std::to_string(xs.c) +
                       ", got " + s.str());
    }
  }
  return add(mul(x, gamma), beta);
}

Tensor sft(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
  if (gamma.shape() != x.shape() || beta.shape() != x.shape()) {
    throw ShapeError("sft: gamma " + gamma.shape().str() + " / beta " + beta.shape().str() +
                     " must match input " + x.shape().str());
  }
  return add(mul(x, gamma), beta);
}

AffineParams gft_gate(const Tensor& gamma, const Tensor& beta) {
  if (gamma.shape() != beta.shape()) {
    throw ShapeError("gft_gate: gamma " + gamma.shape().str() + " and beta " +
                     beta.shape().str() + " differ");
  }
  AffineParams p;
  p.gamma = gamma;
  p.beta = beta;
  p.gate_gamma = sigmoid(gamma);
  p.gate_beta = sigmoid(beta);
  p.gamma_gated = mul(gamma, p.gate_gamma);
  p.beta_gated = mul(beta, p.gate_beta);
  return p;
}

FeatureModulation FeatureModulation::create(int edge_channels, int target_channels,
                                            std::uint64_t seed, const std::string& name) {
  if (edge_channels < 1 || target_channels < 1) {
    throw ValidationError("feature modulation: channel counts must be positive");
  }
  FeatureModulation fm;
  const int mid = std::max(1, target_channels / 2);
  fm.conv1_ = ConvLayer::create(edge_channels, mid, 3, {1, 1, 1}, true, seed, name + ".conv1");
  fm.conv2_ = ConvLayer::create(mid, target_channels, 3, {1, 1, 1}, true, seed, name + ".conv2");
  return fm;
}

Tensor FeatureModulation::forward(const Tensor& z, int target_h, int target_w) const {
  if (target_h <= 0 || target_w <= 0) {
    throw ValidationError("feature modulation: target dims must be positive");
  }
  Tensor r = z;
  if (z.shape().h != target_h || z.shape().w != target_w) {
    r = bilinear_resize(z, target_h, target_w);
  }
  return conv2_.forward(relu(conv1_.forward(r)));
}

void FeatureModulation::collect(const std::string& prefix, NamedParameters& out) const {
  conv1_.collect(prefix + ".conv1", out);
  conv2_.collect(prefix + ".conv2", out);
}

Tensor gft_apply(const Tensor& x, const Tensor& z_hat, const ConvLayer& gamma_branch,
                 const ConvLayer& beta_branch, GateMode gate) {
  if (z_hat.shape() != x.shape()) {
    throw ShapeError("gft_apply: z_hat " + z_hat.shape().str() + " must match input " +
                     x.shape().str());
  }
  const Tensor gamma = gamma_branch.forward(z_hat);
  const Tensor beta = beta_branch.forward(z_hat);
  if (gate == GateMode::forced_one) return sft(x, gamma, beta);
  const AffineParams p = gft_gate(gamma, beta);
  return sft(x, p.gamma_gated, p.beta_gated);
}

GftLayer GftLayer::create(int channels, int edge_channels, GateMode gate, std::uint64_t seed,
                          const std::string& name) {
  GftLayer layer;
  layer.gate_ = gate;
  layer.modulation_ = FeatureModulation::create(edge_channels, channels, seed, name + ".modulation");
  layer.gamma_ = ConvLayer::create(channels, channels, 3, {1, 1, 1}, true, seed, name + ".gamma",
                                   kBranchGain);
  layer.beta_ = ConvLayer::create(channels, channels, 3, {1, 1, 1}, true, seed, name + ".beta",
                                  kBranchGain);
  const Real unit = gate == GateMode::sigmoid ? static_cast<Real>(kGatedUnitScale) : Real(1);
  for (auto& b : layer.gamma_.bias.data()) b = unit;
  return layer;
}

AffineParams GftLayer::affine(const Tensor& z_hat) const {
  const Tensor gamma = gamma_.forward(z_hat);
  const Tensor beta = beta_.forward(z_hat);
  if (gate_ == GateMode::sigmoid) return gft_gate(gamma, beta);
  AffineParams p;
  p.gamma = p.gamma_gated = gamma;
  p.beta = p.beta_gated = beta;
  return p;
}

Tensor GftLayer::apply(const Tensor& x, const Tensor& z_hat) const {
  return gft_apply(x, z_hat, gamma_, beta_, gate_);
}

EdgeCondition GftLayer::condition(const Tensor& z, const Shape& target) const {
  if (target.c != modulation_.target_channels()) {
    throw ShapeError("gft: layer built for " + std::to_string(modulation_.target_channels()) +
                     " channels, feature map has " + std::to_string(target.c));
  }
  return {z, modulation_.forward(z, target.h, target.w)};
}

Tensor GftLayer::forward(const Tensor& x, const Tensor& z) const {
  return apply(x, condition(z, x.shape()).z_hat);
}

void GftLayer::collect(const std::string& prefix, NamedParameters& out) const {
  modulation_.collect(prefix + ".modulation", out);
  gamma_.collect(prefix + ".gamma", out);
  beta_.collect(prefix + ".beta", out);
}

ECCNN_END_NAMESPACE
