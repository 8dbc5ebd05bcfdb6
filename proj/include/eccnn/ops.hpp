#pragma once

#include <span>
#include <vector>

#include "eccnn/labels.hpp"
#include "eccnn/tensor.hpp"

ECCNN_BEGIN_NAMESPACE

struct Conv2dOptions {
  int stride = 1;
  int padding = 0;
  int dilation = 1;
};

// floor((in + 2*padding - dilation*(k-1) - 1) / stride) + 1
int conv_output_size(int in, int kernel, int stride, int padding, int dilation);

// weight: Cout x Cin x kh x kw; bias: undefined or 1 x Cout x 1 x 1.
// Patch expansion followed by a dense matrix product.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              Conv2dOptions options = {});

enum class Activation { relu, sigmoid };

Tensor activation(const Tensor& x, Activation kind);
inline Tensor relu(const Tensor& x) { return activation(x, Activation::relu); }
inline Tensor sigmoid(const Tensor& x) { return activation(x, Activation::sigmoid); }

enum class Elementwise { mul, add };

// b is either the same shape as a, or a per-channel vector of shape
// 1 x C x 1 x 1 / N x C x 1 x 1 broadcast over the spatial (and batch) dims.
Tensor elementwise(const Tensor& a, const Tensor& b, Elementwise op);
inline Tensor mul(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, Elementwise::mul);
}
inline Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, Elementwise::add);
}

enum class Mode { train, eval };

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

struct RunningStats {
  std::vector<Real> mean;
  std::vector<Real> var;
  bool initialized = false;
};

// scale, shift: 1 x C x 1 x 1. Train mode normalizes with the batch mean and
// population variance and folds them into `stats`; the first train batch
// initializes the running values, later ones blend with momentum 0.1 (the
// running variance uses the unbiased estimate).
Tensor batch_norm(const Tensor& x, const Tensor& scale, const Tensor& shift,
                  RunningStats& stats, Mode mode);

// Half-pixel (align_corners = false) bilinear interpolation.
Tensor bilinear_resize(const Tensor& x, int out_h, int out_w);

// Mean over non-ignored pixels of -log softmax(logits)[label].
Tensor cross_entropy_loss(const Tensor& logits, const LabelMap& labels,
                          int ignore_index = kIgnoreIndex);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor concat_channels(std::span<const Tensor> parts);
// N x C x H x W -> N x C x 1 x 1
Tensor global_avg_pool(const Tensor& x);

// Non-differentiable helpers.
std::vector<Real> softmax_channels(const Tensor& logits);
LabelMap argmax_channels(const Tensor& logits);

// One output sample of a 1-D half-pixel linear resampling.
struct LinearTap {
  int i0;
  int i1;
  Real w0;
  Real w1;
};
std::vector<LinearTap> linear_taps(int in_size, int out_size);

// Bilinear resample of a single H x W plane.
std::vector<Real> resize_plane(std::span<const Real> plane, int h, int w,
                               int out_h, int out_w);

ECCNN_END_NAMESPACE
