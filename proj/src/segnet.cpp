#include "eccnn/segnet.hpp"

#include <set>

#include "eccnn/errors.hpp"

ECCNN_BEGIN_NAMESPACE

namespace {

constexpr std::array<int, 4> kStageStride = {2, 2, 1, 1};
constexpr std::array<int, 4> kStageDilation = {1, 1, 2, 4};
constexpr int kStemStride = 2;

std::vector<std::uint32_t> dims_of(const Shape& s) {
  return {static_cast<std::uint32_t>(s.n), static_cast<std::uint32_t>(s.c),
          static_cast<std::uint32_t>(s.h), static_cast<std::uint32_t>(s.w)};
}

}  // namespace

ResidualBlock ResidualBlock::create(int in_channels, int out_channels, int stride, int dilation,
                                    std::uint64_t seed, const std::string& name) {
  ResidualBlock b;
  b.conv1_ = ConvLayer::create(in_channels, out_channels, 3, {stride, dilation, dilation}, false,
                               seed, name + ".conv1");
  b.bn1_ = BatchNormLayer::create(out_channels);
  b.conv2_ = ConvLayer::create(out_channels, out_channels, 3, {1, dilation, dilation}, false, seed,
                               name + ".conv2");
  b.bn2_ = BatchNormLayer::create(out_channels);
  if (stride != 1 || in_channels != out_channels) {
    b.down_conv_ = ConvLayer::create(in_channels, out_channels, 1, {stride, 0, 1}, false, seed,
                                     name + ".downsample.conv");
    b.down_bn_ = BatchNormLayer::create(out_channels);
  }
  return b;
}

Tensor ResidualBlock::forward(const Tensor& x, const Tensor* z, Mode mode) const {
  Tensor y = relu(bn1_.forward(conv1_.forward(x), mode));
  if (gft_ && !bypass_) {
    if (z == nullptr || !z->defined()) {
      throw ValidationError("edge-conditioned block needs an edge map for its stage");
    }
    y = gft_->forward(y, *z);
  }
  y = bn2_.forward(conv2_.forward(y), mode);
  const Tensor skip = down_conv_ ? down_bn_->forward(down_conv_->forward(x), mode) : x;
  return relu(add(y, skip));
}

void ResidualBlock::collect(const std::string& prefix, NamedParameters& out) const {
  conv1_.collect(prefix + ".conv1", out);
  bn1_.collect(prefix + ".bn1", out);
  conv2_.collect(prefix + ".conv2", out);
  bn2_.collect(prefix + ".bn2", out);
  if (down_conv_) {
    down_conv_->collect(prefix + ".downsample.conv", out);
    down_bn_->collect(prefix + ".downsample.bn", out);
  }
}

void ResidualBlock::collect_conditioning(const std::string& prefix, NamedParameters& out) const {
  if (gft_) gft_->collect(prefix, out);
}

void ResidualBlock::collect_buffers(const std::string& prefix, NamedBuffers& out) const {
  bn1_.collect_buffers(prefix + ".bn1", out);
  bn2_.collect_buffers(prefix + ".bn2", out);
  if (down_bn_) down_bn_->collect_buffers(prefix + ".downsample.bn", out);
}

int edge_scale_for_stage(int stage) {
  if (stage < 0 || stage >= static_cast<int>(kStageStride.size())) {
    throw ValidationError("no backbone stage " + std::to_string(stage));
  }
  int factor = kStemStride;
  for (int s = 0; s <= stage; ++s) factor *= kStageStride[s];
  int scale = 0;
  while ((2 << scale) <= factor && scale + 1 < kEdgeScales) ++scale;
  return scale;
}

Tensor ec_block_forward(const ResidualBlock& block, const Tensor& x, const EdgeStack& edges,
                        int edge_scale, Mode mode) {
  if (!block.conditioned() || block.bypass()) return block.forward(x, nullptr, mode);
  if (edge_scale < 0 || edge_scale >= static_cast<int>(edges.scales.size())) {
    throw ValidationError("edge stack has no scale " + std::to_string(edge_scale) +
                          " for this block");
  }
  return block.forward(x, &edges.scales[edge_scale], mode);
}

Aspp Aspp::create(int in_channels, int out_channels, const std::vector<int>& rates,
                  std::uint64_t seed, const std::string& name) {
  if (rates.empty()) throw ValidationError("aspp: rates must not be empty");
  Aspp a;
  a.branches_.push_back({ConvLayer::create(in_channels, out_channels, 1, {}, false, seed,
                                           name + ".branch0.conv"),
                         BatchNormLayer::create(out_channels)});
  for (std::size_t i = 0; i < rates.size(); ++i) {
    const int r = rates[i];
    a.branches_.push_back({ConvLayer::create(in_channels, out_channels, 3, {1, r, r}, false, seed,
                                             name + ".branch" + std::to_string(i + 1) + ".conv"),
                           BatchNormLayer::create(out_channels)});
  }
  a.pool_conv_ = ConvLayer::create(in_channels, out_channels, 1, {}, true, seed, name + ".pool.conv");
  const int cat = out_channels * static_cast<int>(a.branches_.size() + 1);
  a.fuse_ = ConvLayer::create(cat, out_channels, 1, {}, false, seed, name + ".fuse.conv");
  a.fuse_bn_ = BatchNormLayer::create(out_channels);
  return a;
}

Tensor Aspp::forward(const Tensor& x, Mode mode) const {
  std::vector<Tensor> parts;
  parts.reserve(branches_.size() + 1);
  for (const auto& b : branches_) parts.push_back(relu(b.bn.forward(b.conv.forward(x), mode)));
  const Tensor pooled = relu(pool_conv_.forward(global_avg_pool(x)));
  parts.push_back(bilinear_resize(pooled, x.shape().h, x.shape().w));
  return relu(fuse_bn_.forward(fuse_.forward(concat_channels(parts)), mode));
}

void Aspp::collect(const std::string& prefix, NamedParameters& out) const {
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    const std::string p = prefix + ".branch" + std::to_string(i);
    branches_[i].conv.collect(p + ".conv", out);
    branches_[i].bn.collect(p + ".bn", out);
  }
  pool_conv_.collect(prefix + ".pool.conv", out);
  fuse_.collect(prefix + ".fuse.conv", out);
  fuse_bn_.collect(prefix + ".fuse.bn", out);
}

void Aspp::collect_buffers(const std::string& prefix, NamedBuffers& out) const {
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    branches_[i].bn.collect_buffers(prefix + ".branch" + std::to_string(i) + ".bn", out);
  }
  fuse_bn_.collect_buffers(prefix + ".fuse.bn", out);
}

Model Model::build(const ModelConfig& config) {
  config.validate();
  Model m;
  m.config_ = config;
  const std::uint64_t seed = config.seed;
  m.stem_conv_ = ConvLayer::create(config.in_channels, config.stage_channels[0], 3, {kStemStride, 1, 1},
                                   false, seed, "stem.conv");
  m.stem_bn_ = BatchNormLayer::create(config.stage_channels[0]);
  const GateMode gate =
      config.conditioning == ConditioningKind::gft ? GateMode::sigmoid : GateMode::forced_one;
  int in_c = config.stage_channels[0];
  for (int s = 0; s < 4; ++s) {
    Stage stage;
    stage.name = std::string(kStageNames[s]);
    const int out_c = config.stage_channels[s];
    for (int b = 0; b < config.blocks_per_stage[s]; ++b) {
      const std::string name = stage.name + "." + std::to_string(b);
      ResidualBlock block = ResidualBlock::create(b == 0 ? in_c : out_c, out_c,
                                                  b == 0 ? kStageStride[s] : 1, kStageDilation[s],
                                                  seed, name);
      if (config.conditioned(s)) {
        block.attach_conditioning(GftLayer::create(out_c, 1, gate, seed, "conditioning." + name));
      }
      stage.blocks.push_back(std::move(block));
    }
    in_c = out_c;
    m.stages_.push_back(std::move(stage));
  }
  m.aspp_ = Aspp::create(in_c, config.aspp_channels, config.atrous_rates, seed, "aspp");
  m.classifier_ = ConvLayer::create(config.aspp_channels, config.num_classes, 1, {}, true, seed,
                                    "classifier");
  return m;
}

Tensor Model::backbone_features(const Tensor& image, const EdgeStack& edges, Mode mode) const {
  if (image.shape().c != config_.in_channels) {
    throw ShapeError("model expects " + std::to_string(config_.in_channels) +
                     "-channel input, got " + image.shape().str());
  }
  if (!config_.gft_stages.empty() && edges.batch() != image.shape().n) {
    throw ValidationError("edge stack batch " + std::to_string(edges.batch()) +
                          " does not match image batch " + std::to_string(image.shape().n));
  }
  Tensor x = relu(stem_bn_.forward(stem_conv_.forward(image), mode));
  for (int s = 0; s < static_cast<int>(stages_.size()); ++s) {
    for (const auto& block : stages_[s].blocks) x = ec_block_forward(block, x, edges, edge_scale_for_stage(s), mode);
  }
  return x;
}

Tensor Model::forward(const Tensor& image, const EdgeStack& edges, Mode mode) const {
  const Tensor features = backbone_features(image, edges, mode);
  const Tensor logits = classifier_.forward(aspp_.forward(features, mode));
  return bilinear_resize(logits, image.shape().h, image.shape().w);
}

NamedParameters Model::named_parameters() const {
  NamedParameters out;
  stem_conv_.collect("stem.conv", out);
  stem_bn_.collect("stem.bn", out);
  for (const auto& stage : stages_) {
    for (std::size_t b = 0; b < stage.blocks.size(); ++b) {
      stage.blocks[b].collect(stage.name + "." + std::to_string(b), out);
    }
  }
  for (const auto& stage : stages_) {
    for (std::size_t b = 0; b < stage.blocks.size(); ++b) {
      stage.blocks[b].collect_conditioning("conditioning." + stage.name + "." + std::to_string(b),
                                           out);
    }
  }
  aspp_.collect("aspp", out);
  classifier_.collect("classifier", out);
  return out;
}

std::vector<Parameter> Model::parameters() const {
  std::vector<Parameter> out;
  for (auto& [name, p] : named_parameters()) out.push_back(p);
  return out;
}

NamedBuffers Model::named_buffers() const {
  NamedBuffers out;
  stem_bn_.collect_buffers("stem.bn", out);
  for (const auto& stage : stages_) {
    for (std::size_t b = 0; b < stage.blocks.size(); ++b) {
      stage.blocks[b].collect_buffers(stage.name + "." + std::to_string(b), out);
    }
  }
  aspp_.collect_buffers("aspp", out);
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : named_parameters()) n += p.shape().numel();
  return n;
}

void Model::set_bypass(bool bypass) {
  for (auto& stage : stages_) {
    for (auto& block : stage.blocks) block.set_bypass(bypass);
  }
}

void Model::reset_classifier(int num_classes, std::uint64_t seed) {
  if (num_classes < 2) throw ValidationError("num_classes must be >= 2");
  classifier_ = ConvLayer::create(config_.aspp_channels, num_classes, 1, {}, true, seed,
                                  "classifier");
  config_.num_classes = num_classes;
}

bool Model::is_classifier_entry(std::string_view name) {
  return name.starts_with("classifier.");
}

Checkpoint Model::to_checkpoint() const {
  Checkpoint ckpt;
  for (const auto& [name, p] : named_parameters()) {
    CheckpointEntry e{name, dims_of(p.shape()), {}};
    e.values.reserve(p.shape().numel());
    for (Real v : p.data()) e.values.push_back(static_cast<float>(v));
    ckpt.add(std::move(e));
  }
  for (const auto& [name, stats] : named_buffers()) {
    if (!stats->initialized) continue;
    const auto c = static_cast<std::uint32_t>(stats->mean.size());
    CheckpointEntry mean{name + ".running_mean", {c}, {}};
    CheckpointEntry var{name + ".running_var", {c}, {}};
    for (Real v : stats->mean) mean.values.push_back(static_cast<float>(v));
    for (Real v : stats->var) var.values.push_back(static_cast<float>(v));
    ckpt.add(std::move(mean));
    ckpt.add(std::move(var));
  }
  return ckpt;
}

void Model::load_checkpoint(const Checkpoint& ckpt, bool skip_classifier) {
  std::set<std::string> used;
  for (auto& [name, p] : named_parameters()) {
    if (skip_classifier && is_classifier_entry(name)) {
      used.insert(name);
      continue;
    }
    const CheckpointEntry* e = ckpt.find(name);
    if (e == nullptr) throw ValidationError("checkpoint is missing parameter " + name);
    if (e->dims != dims_of(p.shape())) {
      throw ValidationError("checkpoint entry " + name + " has incompatible shape for " +
                            p.shape().str());
    }
    auto dst = p.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<Real>(e->values[i]);
    used.insert(name);
  }
  for (auto& [name, stats] : named_buffers()) {
    const CheckpointEntry* mean = ckpt.find(name + ".running_mean");
    const CheckpointEntry* var = ckpt.find(name + ".running_var");
    if (mean == nullptr || var == nullptr) {
      stats->initialized = false;
      continue;
    }
    stats->mean.assign(mean->values.begin(), mean->values.end());
    stats->var.assign(var->values.begin(), var->values.end());
    stats->initialized = true;
    used.insert(mean->name);
    used.insert(var->name);
  }
  for (const auto& e : ckpt.entries()) {
    if (skip_classifier && is_classifier_entry(e.name)) continue;
    if (!used.count(e.name)) {
      throw ValidationError("checkpoint entry " + e.name + " does not belong to this model");
    }
  }
}

ECCNN_END_NAMESPACE
