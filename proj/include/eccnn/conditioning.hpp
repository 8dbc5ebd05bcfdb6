#pragma once

#include <cstdint>
#include <string>

#include "eccnn/layers.hpp"

ECCNN_BEGIN_NAMESPACE

// Edge prior before and after feature modulation.
struct EdgeCondition {
  Tensor z;      // raw edge probabilities, N x Cz x h x w, values in [0, 1]
  Tensor z_hat;  // matched to the target feature map's C, H, W
};

// Scale/shift maps for one conditioning layer. For the ungated transform the
// gates are undefined and the gated tensors alias the raw ones.
struct AffineParams {
  Tensor gamma;
  Tensor beta;
  Tensor gamma_gated;
  Tensor beta_gated;
  Tensor gate_gamma;
  Tensor gate_beta;
};

// gamma(z) * x + beta(z) with per-channel vectors (1 x C x 1 x 1 or N x C x 1 x 1).
Tensor film(const Tensor& x, const Tensor& gamma, const Tensor& beta);

// gamma(z) (.) x (+) beta(z) with maps of the same shape as x.
Tensor sft(const Tensor& x, const Tensor& gamma, const Tensor& beta);

// gate = sigmoid per tensor; gated = raw (.) gate.
AffineParams gft_gate(const Tensor& gamma, const Tensor& beta);

// Bias that makes the gated scale start at exactly one: b * sigmoid(b) = 1.
inline constexpr double kGatedUnitScale = 1.2784645427610737;

enum class GateMode {
  sigmoid,     // gated feature-wise transform
  forced_one,  // gate replaced by the constant 1, i.e. a plain spatial transform
};

// Resize to the target resolution, then two 3x3 convolutions
// Cz -> max(1, C/2) -> C with a relu between them.
class FeatureModulation {
 public:
  static FeatureModulation create(int edge_channels, int target_channels,
                                  std::uint64_t seed, const std::string& name);

  Tensor forward(const Tensor& z, int target_h, int target_w) const;
  int target_channels() const { return conv2_.out_channels(); }

  ConvLayer& conv1() { return conv1_; }
  ConvLayer& conv2() { return conv2_; }
  void collect(const std::string& prefix, NamedParameters& out) const;

 private:
  ConvLayer conv1_;
  ConvLayer conv2_;
};

// gamma and beta each come from an independent 3x3 convolution of z_hat; the
// result is gamma_hat (.) x (+) beta_hat.
Tensor gft_apply(const Tensor& x, const Tensor& z_hat, const ConvLayer& gamma_branch,
                 const ConvLayer& beta_branch, GateMode gate = GateMode::sigmoid);

// Feature modulation, information control and feature-wise transform bundled
// as one insertable layer.
class GftLayer {
 public:
  static GftLayer create(int channels, int edge_channels, GateMode gate,
                         std::uint64_t seed, const std::string& name);

  AffineParams affine(const Tensor& z_hat) const;
  Tensor apply(const Tensor& x, const Tensor& z_hat) const;
  // Modulates z to x's resolution and channel count, then applies.
  Tensor forward(const Tensor& x, const Tensor& z) const;
  EdgeCondition condition(const Tensor& z, const Shape& target) const;

  GateMode gate() const { return gate_; }
  void set_gate(GateMode gate) { gate_ = gate; }
  FeatureModulation& modulation() { return modulation_; }
  ConvLayer& gamma_branch() { return gamma_; }
  ConvLayer& beta_branch() { return beta_; }
  void collect(const std::string& prefix, NamedParameters& out) const;

 private:
  FeatureModulation modulation_;
  ConvLayer gamma_;
  ConvLayer beta_;
  GateMode gate_ = GateMode::sigmoid;
};

ECCNN_END_NAMESPACE
