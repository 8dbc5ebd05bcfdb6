#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "eccnn/config.hpp"

namespace eccnn {

// Backbone stages in order. Conditioning layers may go into the first three.
inline constexpr std::array<std::string_view, 4> kStageNames = {"conv2_x", "conv3_x", "conv4_x",
                                                                "conv5_x"};
inline constexpr int kConditionableStages = 3;

enum class ConditioningKind { gft, sft };

std::string_view to_string(ConditioningKind kind);
ConditioningKind parse_conditioning(std::string_view text);

// Index into kStageNames; rejects anything but conv2_x, conv3_x, conv4_x.
int conditionable_stage_index(std::string_view name);

struct ModelConfig {
  std::array<int, 4> stage_channels{16, 32, 48, 64};
  std::array<int, 4> blocks_per_stage{1, 1, 1, 1};
  std::vector<std::string> gft_stages;  // kept sorted by stage order
  std::vector<int> atrous_rates{1, 2, 4};
  int num_classes = 6;
  int in_channels = 1;
  int aspp_channels = 32;
  ConditioningKind conditioning = ConditioningKind::gft;
  std::uint64_t seed = 1;

  static constexpr int kOutputStride = 8;

  bool conditioned(int stage_index) const;
  void set_gft_stages(const std::vector<std::string>& stages);
  void validate() const;

  // Keys: stage_channels, blocks_per_stage, gft_stages, atrous_rates,
  // num_classes, seed, conditioning, aspp_channels, in_channels.
  static ModelConfig from_section(const ConfigSection& section, ModelConfig defaults);
  static ModelConfig from_section(const ConfigSection& section);
  void write_section(ConfigSection& section) const;
};

// "mini": one basic block per stage. "mini-deep": two.
ModelConfig model_preset(std::string_view depth);

}  // namespace eccnn
