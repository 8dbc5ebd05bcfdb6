#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eccnn/checkpoint.hpp"
#include "eccnn/conditioning.hpp"
#include "eccnn/edgenet.hpp"
#include "eccnn/layers.hpp"
#include "eccnn/model_config.hpp"

ECCNN_BEGIN_NAMESPACE

// Basic residual unit: conv-BN-relu, [conditioning layer], conv-BN, skip add,
// relu. With a conditioning layer present it is an edge-conditioned block.
class ResidualBlock {
 public:
  static ResidualBlock create(int in_channels, int out_channels, int stride, int dilation,
                              std::uint64_t seed, const std::string& name);

  void attach_conditioning(GftLayer layer) { gft_ = std::move(layer); }
  bool conditioned() const { return gft_.has_value(); }
  // When set the conditioning layer is skipped and the block is a plain unit.
  void set_bypass(bool bypass) { bypass_ = bypass; }
  bool bypass() const { return bypass_; }

  // `z` is the edge map for this block's stage; ignored by plain blocks.
  Tensor forward(const Tensor& x, const Tensor* z, Mode mode) const;

  GftLayer* conditioning() { return gft_ ? &*gft_ : nullptr; }
  BatchNormLayer& bn2() { return bn2_; }
  void collect(const std::string& prefix, NamedParameters& out) const;
  void collect_conditioning(const std::string& prefix, NamedParameters& out) const;
  void collect_buffers(const std::string& prefix, NamedBuffers& out) const;

 private:
  ConvLayer conv1_;
  BatchNormLayer bn1_;
  ConvLayer conv2_;
  BatchNormLayer bn2_;
  std::optional<ConvLayer> down_conv_;
  std::optional<BatchNormLayer> down_bn_;
  std::optional<GftLayer> gft_;
  bool bypass_ = false;
};

// Edge scale whose resolution matches the stage's output, or the coarsest
// scale for stages below it.
int edge_scale_for_stage(int stage);

// Runs the block conditioned on edge scale `edge_scale`.
Tensor ec_block_forward(const ResidualBlock& block, const Tensor& x, const EdgeStack& edges,
                        int edge_scale, Mode mode);

// Parallel 3x3 atrous convolutions (one per rate), a 1x1 convolution and an
// image-pooling branch, concatenated and fused by a 1x1 convolution.
class Aspp {
 public:
  static Aspp create(int in_channels, int out_channels, const std::vector<int>& rates,
                     std::uint64_t seed, const std::string& name);
  Tensor forward(const Tensor& x, Mode mode) const;
  int out_channels() const { return fuse_.out_channels(); }
  void collect(const std::string& prefix, NamedParameters& out) const;
  void collect_buffers(const std::string& prefix, NamedBuffers& out) const;

 private:
  struct Branch {
    ConvLayer conv;
    BatchNormLayer bn;
  };
  std::vector<Branch> branches_;  // 1x1 first, then one per rate
  ConvLayer pool_conv_;
  ConvLayer fuse_;
  BatchNormLayer fuse_bn_;
};

inline Tensor aspp_forward(const Aspp& aspp, const Tensor& x, Mode mode) {
  return aspp.forward(x, mode);
}

struct Stage {
  std::string name;
  std::vector<ResidualBlock> blocks;
};

class Model {
 public:
  static Model build(const ModelConfig& config);

  Model(Model&&) = default;
  Model& operator=(Model&&) = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  // image: N x 1 x H x W; edges from the same images. Returns N x K x H x W logits.
  Tensor forward(const Tensor& image, const EdgeStack& edges, Mode mode) const;
  // Deepest backbone feature map (input of the pyramid pooling head).
  Tensor backbone_features(const Tensor& image, const EdgeStack& edges, Mode mode) const;

  const ModelConfig& config() const { return config_; }
  NamedParameters named_parameters() const;
  std::vector<Parameter> parameters() const;
  NamedBuffers named_buffers() const;
  std::size_t parameter_count() const;

  // Every conditioning layer is skipped (or re-enabled).
  void set_bypass(bool bypass);
  // Replaces the classifier by a freshly initialized one for `num_classes`.
  void reset_classifier(int num_classes, std::uint64_t seed);

  static bool is_classifier_entry(std::string_view name);
  Checkpoint to_checkpoint() const;
  // Copies every entry into the model. With `skip_classifier` the classifier
  // entries are ignored. Missing or mis-shaped entries are rejected.
  void load_checkpoint(const Checkpoint& ckpt, bool skip_classifier = false);

  std::vector<Stage>& stages() { return stages_; }
  const std::vector<Stage>& stages() const { return stages_; }

 private:
  Model() = default;

  ModelConfig config_;
  ConvLayer stem_conv_;
  BatchNormLayer stem_bn_;
  std::vector<Stage> stages_;
  Aspp aspp_;
  ConvLayer classifier_;
};

ECCNN_END_NAMESPACE
