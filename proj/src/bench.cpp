#include "eccnn/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "eccnn/config.hpp"
#include "eccnn/errors.hpp"
#include "eccnn/segnet.hpp"

ECCNN_BEGIN_NAMESPACE

std::string placement_label(const std::vector<std::string>& stages) {
  return stages.empty() ? "baseline" : join(stages, "+");
}

std::vector<std::vector<std::string>> default_placements() {
  return {{}, {"conv2_x"}, {"conv3_x"}, {"conv4_x"}};
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double one_pass(const Model& model, const Dataset& data) {
  NoGradGuard no_grad;
  const bool with_edges = !model.config().gft_stages.empty();
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& s : data.samples) {
    const EdgeStack edges = with_edges ? sample_edges(s) : EdgeStack{};
    const Tensor logits = model.forward(s.image, edges, Mode::eval);
    (void)argmax_channels(logits);
  }
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / static_cast<double>(data.size());
}

}  // namespace

std::vector<BenchRow> benchmark_inference(const ModelConfig& base, const Dataset& data,
                                          const std::vector<std::vector<std::string>>& placements,
                                          int warmup, int reps) {
  if (reps < 1) throw ValidationError("benchmark: reps must be at least 1");
  if (warmup < 0) throw ValidationError("benchmark: warmup must be non-negative");
  if (data.size() == 0) throw ValidationError("benchmark: empty dataset");
  if (placements.empty()) throw ValidationError("benchmark: no configurations");

  std::vector<Model> models;
  std::vector<BenchRow> rows;
  for (const auto& stages : placements) {
    ModelConfig cfg = base;
    cfg.set_gft_stages(stages);
    Model m = Model::build(cfg);
    // Eval mode needs running statistics; one train pass provides them.
    {
      NoGradGuard no_grad;
      const Sample& s = data.samples.front();
      m.forward(s.image, cfg.gft_stages.empty() ? EdgeStack{} : sample_edges(s), Mode::train);
    }
    models.push_back(std::move(m));
    rows.push_back({placement_label(cfg.gft_stages), 0, 0, {}});
  }
  for (int r = 0; r < warmup; ++r) {
    for (const auto& m : models) one_pass(m, data);
  }
  for (int r = 0; r < reps; ++r) {
    for (std::size_t i = 0; i < models.size(); ++i) rows[i].reps.push_back(one_pass(models[i], data));
  }
  for (auto& row : rows) {
    row.mean_s = std::accumulate(row.reps.begin(), row.reps.end(), 0.0) / static_cast<double>(row.reps.size());
    row.median_s = median(row.reps);
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "config,mean_s,median_s\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6e,%.6e", r.mean_s, r.median_s);
    os << r.config << "," << buf << "\n";
  }
  return os.str();
}

ECCNN_END_NAMESPACE
