#include "eccnn/model_config.hpp"

#include <algorithm>

#include "eccnn/errors.hpp"

namespace eccnn {

std::string_view to_string(ConditioningKind kind) {
  return kind == ConditioningKind::gft ? "gft" : "sft";
}

ConditioningKind parse_conditioning(std::string_view text) {
  if (text == "gft") return ConditioningKind::gft;
  if (text == "sft") return ConditioningKind::sft;
  throw ValidationError("unknown conditioning '" + std::string(text) + "' (expected gft or sft)");
}

int conditionable_stage_index(std::string_view name) {
  for (int i = 0; i < kConditionableStages; ++i) {
    if (kStageNames[i] == name) return i;
  }
  throw ValidationError("invalid stage '" + std::string(name) +
                        "' (expected conv2_x, conv3_x or conv4_x)");
}

bool ModelConfig::conditioned(int stage_index) const {
  if (stage_index < 0 || stage_index >= kConditionableStages) return false;
  return std::find(gft_stages.begin(), gft_stages.end(), kStageNames[stage_index]) !=
         gft_stages.end();
}

void ModelConfig::set_gft_stages(const std::vector<std::string>& stages) {
  std::vector<int> idx;
  for (const auto& s : stages) idx.push_back(conditionable_stage_index(s));
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  gft_stages.clear();
  for (int i : idx) gft_stages.emplace_back(kStageNames[i]);
}

void ModelConfig::validate() const {
  for (const auto& s : gft_stages) conditionable_stage_index(s);
  if (num_classes < 2) throw ValidationError("num_classes must be >= 2");
  for (int c : stage_channels) {
    if (c < 1) throw ValidationError("stage_channels must be positive");
  }
  for (int b : blocks_per_stage) {
    if (b < 1) throw ValidationError("blocks_per_stage must be >= 1");
  }
  if (atrous_rates.empty()) throw ValidationError("atrous_rates must not be empty");
  for (int r : atrous_rates) {
    if (r < 1) throw ValidationError("atrous rates must be >= 1");
  }
  if (in_channels < 1 || aspp_channels < 1) {
    throw ValidationError("in_channels and aspp_channels must be positive");
  }
}

namespace {
std::array<int, 4> four(const std::vector<int>& v, std::string_view key) {
  if (v.size() != 4) throw ValidationError(std::string(key) + " needs exactly 4 values");
  return {v[0], v[1], v[2], v[3]};
}
}  // namespace

ModelConfig ModelConfig::from_section(const ConfigSection& section) {
  return from_section(section, ModelConfig{});
}

ModelConfig ModelConfig::from_section(const ConfigSection& section, ModelConfig defaults) {
  section.require_known({"stage_channels", "blocks_per_stage", "gft_stages", "atrous_rates",
                         "num_classes", "seed", "conditioning", "aspp_channels", "in_channels",
                         "depth"});
  ModelConfig c = defaults;
  if (auto depth = section.get("depth")) {
    const auto preset = model_preset(*depth);
    c.stage_channels = preset.stage_channels;
    c.blocks_per_stage = preset.blocks_per_stage;
  }
  c.stage_channels = four(section.get_int_list("stage_channels", {c.stage_channels.begin(),
                                                                  c.stage_channels.end()}),
                          "stage_channels");
  c.blocks_per_stage = four(section.get_int_list("blocks_per_stage",
                                                 {c.blocks_per_stage.begin(), c.blocks_per_stage.end()}),
                            "blocks_per_stage");
  c.set_gft_stages(section.get_list("gft_stages", c.gft_stages));
  c.atrous_rates = section.get_int_list("atrous_rates", c.atrous_rates);
  c.num_classes = static_cast<int>(section.get_int("num_classes", c.num_classes));
  c.in_channels = static_cast<int>(section.get_int("in_channels", c.in_channels));
  c.aspp_channels = static_cast<int>(section.get_int("aspp_channels", c.aspp_channels));
  c.seed = static_cast<std::uint64_t>(section.get_int("seed", static_cast<long long>(c.seed)));
  if (auto k = section.get("conditioning")) c.conditioning = parse_conditioning(*k);
  c.validate();
  return c;
}

void ModelConfig::write_section(ConfigSection& section) const {
  section.set("stage_channels", join_ints({stage_channels.begin(), stage_channels.end()}));
  section.set("blocks_per_stage", join_ints({blocks_per_stage.begin(), blocks_per_stage.end()}));
  section.set("gft_stages", gft_stages.empty() ? "none" : join(gft_stages, ","));
  section.set("conditioning", std::string(to_string(conditioning)));
  section.set("atrous_rates", join_ints(atrous_rates));
  section.set("aspp_channels", std::to_string(aspp_channels));
  section.set("num_classes", std::to_string(num_classes));
  section.set("in_channels", std::to_string(in_channels));
  section.set("seed", std::to_string(seed));
}

ModelConfig model_preset(std::string_view depth) {
  ModelConfig c;
  if (depth == "mini") {
    c.blocks_per_stage = {1, 1, 1, 1};
  } else if (depth == "mini-deep") {
    c.blocks_per_stage = {2, 2, 2, 2};
  } else {
    throw ValidationError("unknown depth '" + std::string(depth) + "' (expected mini or mini-deep)");
  }
  return c;
}

}  // namespace eccnn
