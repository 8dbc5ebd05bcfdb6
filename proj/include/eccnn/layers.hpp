#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "eccnn/ops.hpp"
#include "eccnn/parameter.hpp"

ECCNN_BEGIN_NAMESPACE

using NamedBuffers = std::vector<std::pair<std::string, std::shared_ptr<RunningStats>>>;

// Gaussian with std sqrt(2 / fan_in) times `gain`, drawn from a stream
// derived from (seed, name) so each tensor's values depend only on those.
std::vector<Real> he_normal(std::size_t count, int fan_in, std::uint64_t seed,
                            const std::string& name, double gain = 1.0);

struct ConvLayer {
  Parameter weight;
  Parameter bias;  // undefined when the layer has no bias
  Conv2dOptions options;

  static ConvLayer create(int in_channels, int out_channels, int kernel,
                          Conv2dOptions options, bool with_bias, std::uint64_t seed,
                          const std::string& name, double gain = 1.0);

  Tensor forward(const Tensor& x) const;
  int in_channels() const { return weight.shape().c; }
  int out_channels() const { return weight.shape().n; }
  void collect(const std::string& prefix, NamedParameters& out) const;
  void fill_zero();
};

struct BatchNormLayer {
  Parameter scale;
  Parameter shift;
  std::shared_ptr<RunningStats> stats;

  static BatchNormLayer create(int channels);
  Tensor forward(const Tensor& x, Mode mode) const;
  void collect(const std::string& prefix, NamedParameters& out) const;
  void collect_buffers(const std::string& prefix, NamedBuffers& out) const;
};

ECCNN_END_NAMESPACE
