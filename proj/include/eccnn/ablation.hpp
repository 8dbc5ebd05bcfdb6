#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "eccnn/trainer.hpp"

ECCNN_BEGIN_NAMESPACE

// One configuration evaluated over several seeds.
struct AblationRow {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::vector<double> pixel_accuracy;
  std::vector<double> mean_iou;

  double mean_pixel_accuracy() const;
  double mean_miou() const;
};

// A model/training variant for one run. Every run with a given seed shares
// the seed for weight init, shuffling and augmentation, so configurations
// differ only in what the variant changes.
struct AblationVariant {
  std::string name;
  std::function<void(ModelConfig&)> configure;
};

struct AblationSetup {
  ModelConfig model;
  TrainConfig train;
  const Dataset* train_data = nullptr;
  const Dataset* test_data = nullptr;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  // Progress callback: (config, seed, test mIoU).
  std::function<void(const std::string&, std::uint64_t, double)> on_run;
};

// Trains and tests every variant for every seed.
std::vector<AblationRow> run_ablation(const AblationSetup& setup,
                                      const std::vector<AblationVariant>& variants);

// Rows baseline, SFT, GFT; the conditioned rows use `stages`.
std::vector<AblationVariant> conditioning_variants(const std::vector<std::string>& stages);
// GFT at every non-empty subset of conv2_x..conv4_x, after the baseline.
std::vector<AblationVariant> stage_variants();

struct InitAblationSetup {
  AblationSetup target;             // model, train config and variant-B data
  const Dataset* pretrain_data = nullptr;  // variant A
  TrainConfig pretrain;
};

// Rows random (B only), synthetic (A then B with a fresh classifier) and
// carry (A then B keeping the classifier; needs equal class counts).
std::vector<AblationRow> run_init_ablation(const InitAblationSetup& setup);

// CSV (config, pixacc, miou, then per-seed miou columns).
std::string ablation_csv(const std::vector<AblationRow>& rows);

ECCNN_END_NAMESPACE
