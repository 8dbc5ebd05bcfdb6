#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eccnn/config.hpp"
#include "eccnn/dataset.hpp"
#include "eccnn/metrics.hpp"
#include "eccnn/random.hpp"
#include "eccnn/segnet.hpp"

ECCNN_BEGIN_NAMESPACE

// base * (1 - iter / max_iter)^power; requires 0 <= iter <= max_iter.
double poly_lr(double base, long long iter, long long max_iter, double power);

struct TrainConfig {
  double base_lr = 0.001;
  double power = 0.9;
  double momentum = 0.9;
  double weight_decay = 0.0001;
  int epochs = 100;
  int batch_size = 8;
  // 0 keeps the full image size.
  int crop_size = 48;
  double scale_min = 0.5;
  double scale_max = 2.0;
  bool mirror = true;
  bool augment = true;
  // Evaluate every n epochs on the evaluation set; 0 evaluates only after the
  // last epoch.
  int eval_every = 0;
  std::uint64_t seed = 1;

  void validate() const;
  static TrainConfig from_section(const ConfigSection& section, TrainConfig defaults);
  static TrainConfig from_section(const ConfigSection& section);
  void write_section(ConfigSection& section) const;
};

// Geometric transform shared by an image, its mask and loaded edge maps.
struct AugmentParams {
  bool mirror = false;
  int scaled_h = 0;
  int scaled_w = 0;
  int crop_y = 0;
  int crop_x = 0;
  int out_h = 0;
  int out_w = 0;

  static AugmentParams identity(int h, int w) { return {false, h, w, 0, 0, h, w}; }
};

AugmentParams sample_augment(int h, int w, const TrainConfig& config, Rng& rng);

struct Augmented {
  Tensor image;
  LabelMap mask;
  std::optional<EdgeStack> edges;  // only for samples with loaded edges
};

// Image resampled bilinearly, mask by nearest neighbour; padding is 0 for the
// image and kIgnoreIndex for the mask.
Augmented apply_augment(const Sample& sample, const AugmentParams& params);

struct EpochRecord {
  int epoch = 0;
  double loss = 0;
  double pixel_accuracy = 0;
  double mean_iou = 0;
};

struct StageResult {
  std::vector<double> iteration_loss;
  std::vector<EpochRecord> history;
  Checkpoint best;
  double best_miou = -1;
  int best_epoch = 0;
};

// CSV columns epoch, loss, pixacc, miou.
std::string history_csv(const std::vector<EpochRecord>& history);

// Confusion matrix of the model's argmax predictions over a dataset.
ConfusionMatrix evaluate(const Model& model, const Dataset& data, int batch_size = 8);

// Shuffled mini-batch SGD with the poly schedule. Per-epoch metrics are taken
// on `eval_data` (the training set without augmentation when null). The best
// checkpoint by mIoU is kept in the result.
StageResult train_stage(Model& model, const Dataset& train, const TrainConfig& config,
                        const Dataset* eval_data = nullptr);

// One entry of a progressive plan. `init` is "random", "previous" (carry the
// preceding stage's weights) or a checkpoint path.
struct StageSpec {
  std::string name;
  std::string init = "previous";
  std::filesystem::path dataset;
  int epochs = 0;  // 0 keeps the train config's value
  bool reset_classifier = false;
  std::optional<double> base_lr;
};

struct StagePlan {
  std::vector<StageSpec> stages;

  // Sections named "stage.<name>" in file order.
  static StagePlan from_config(const ConfigFile& file);
  void write(ConfigFile& file) const;
};

struct ProgressiveResult {
  Model model;
  std::vector<StageResult> stages;
};

// Runs the stages in order. Class counts differing between consecutive
// stages require reset_classifier.
ProgressiveResult progressive_train(const StagePlan& plan, const ModelConfig& model_config,
                                    const TrainConfig& config);

// Variant taking already loaded datasets, one per stage.
ProgressiveResult progressive_train(const StagePlan& plan, const std::vector<const Dataset*>& data,
                                    const ModelConfig& model_config, const TrainConfig& config);

ECCNN_END_NAMESPACE
