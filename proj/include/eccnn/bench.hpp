#pragma once

#include <string>
#include <vector>

#include "eccnn/dataset.hpp"
#include "eccnn/model_config.hpp"

ECCNN_BEGIN_NAMESPACE

struct BenchRow {
  std::string config;
  double mean_s = 0;
  double median_s = 0;
  std::vector<double> reps;  // per-image seconds of each repetition
};

// Label of a conditioning placement: "baseline" for none, else the stage
// names joined by '+'.
std::string placement_label(const std::vector<std::string>& stages);

// Eval-mode, batch-1 wall-clock seconds per image. Conditioned models include
// the edge stream. Repetitions are interleaved across placements so clock
// drift affects every row alike. One row per placement, in order.
std::vector<BenchRow> benchmark_inference(const ModelConfig& base, const Dataset& data,
                                          const std::vector<std::vector<std::string>>& placements,
                                          int warmup, int reps);

// baseline, conv2_x, conv3_x, conv4_x.
std::vector<std::vector<std::string>> default_placements();

// CSV (config, mean_s, median_s).
std::string bench_csv(const std::vector<BenchRow>& rows);

ECCNN_END_NAMESPACE
