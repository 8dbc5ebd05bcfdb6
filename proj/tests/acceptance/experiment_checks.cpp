// Compiled against the 32-bit core.

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "criteria.hpp"
#include "eccnn/ablation.hpp"
#include "eccnn/bench.hpp"
#include "eccnn/commands.hpp"
#include "eccnn/dataio.hpp"
#include "eccnn/dataset.hpp"
#include "eccnn/trainer.hpp"

static_assert(eccnn::kPrecisionBits == 32, "experiments run on the 32-bit core");

namespace acceptance {
namespace {

using namespace eccnn;
namespace fs = std::filesystem;

constexpr std::uint64_t kDataSeed = 3;
const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5};

// Shared training protocol of the ablations.
TrainConfig protocol() {
  TrainConfig t;
  t.epochs = 80;
  t.batch_size = 8;
  t.crop_size = 48;
  t.base_lr = 0.1;
  return t;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fixed(double v, int digits = 2) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

const AblationRow& row(const std::vector<AblationRow>& rows, const std::string& name) {
  for (const auto& r : rows) {
    if (r.config == name) return r;
  }
  throw std::runtime_error("missing ablation row " + name);
}

std::string per_seed(const AblationRow& r) {
  std::string out;
  for (double v : r.mean_iou) out += (out.empty() ? "" : "/") + fixed(100 * v, 1);
  return out;
}

}  // namespace

ExperimentData make_experiment_data(const fs::path& work) {
  SynthSceneSpec spec;  // 64 x 64, six classes, crossover 0.6
  ExperimentData d;
  thermogen(spec, 200, kDataSeed, work / "thermo" / "train", "train");
  thermogen(spec, 100, kDataSeed + 1000000, work / "thermo" / "test", "test");
  d.train_manifest = work / "thermo" / "train" / "manifest.txt";
  d.test_manifest = work / "thermo" / "test" / "manifest.txt";
  return d;
}

std::vector<Verdict> conditioning_and_stage_ablations(const ExperimentData& data) {
  const Dataset train = load_dataset(data.train_manifest);
  const Dataset test = load_dataset(data.test_manifest);
  AblationSetup setup;
  setup.train = protocol();
  setup.model.num_classes = train.num_classes();
  setup.train_data = &train;
  setup.test_data = &test;
  setup.seeds = kSeeds;

  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = run_ablation(setup, conditioning_variants({"conv2_x"}));
  const double conditioning_s = seconds_since(t0);
  const auto deep = run_ablation(setup, {{"GFT conv4_x", [](ModelConfig& c) {
                                            c.set_gft_stages({"conv4_x"});
                                            c.conditioning = ConditioningKind::gft;
                                          }}});

  const double base = 100 * row(rows, "baseline").mean_miou();
  const double sft = 100 * row(rows, "SFT").mean_miou();
  const double gft = 100 * row(rows, "GFT").mean_miou();
  const double gft4 = 100 * deep.front().mean_miou();

  Verdict a{4, gft >= sft && sft >= base && gft - base >= 1.0 && conditioning_s <= 900, ""};
  a.detail = "mean mIoU GFT " + fixed(gft) + " >= SFT " + fixed(sft) + " >= baseline " + fixed(base) +
             ", GFT - baseline " + fixed(gft - base) + " (>= 1.00), " + fixed(conditioning_s, 0) +
             " s (<= 900 s); per seed baseline " + per_seed(row(rows, "baseline")) + ", SFT " +
             per_seed(row(rows, "SFT")) + ", GFT " + per_seed(row(rows, "GFT"));
  Verdict b{5, gft >= gft4, ""};
  b.detail = "mean mIoU GFT conv2_x " + fixed(gft) + " >= GFT conv4_x " + fixed(gft4) + "; per seed conv4_x " +
             per_seed(deep.front());
  return {a, b};
}

Verdict initialization_ablation(const fs::path& work) {
  // Variant A: a synthetic source domain with its own label set and milder
  // crossover. Variant B: the crossover target with a small training split.
  SynthSceneSpec a;
  a.class_names = {"background", "hot_disc", "warm_block", "mild_bar", "cool_disc"};
  a.class_intensity = {0.2, 0.9, 0.7, 0.55, 0.4};
  a.crossover_rate = 0.3;
  SynthSceneSpec b;
  thermogen(a, 300, 11, work / "variant_a", "train");
  thermogen(b, 40, 21, work / "variant_b" / "train", "train");
  thermogen(b, 100, 21 + 1000000, work / "variant_b" / "test", "test");
  const Dataset pre = load_dataset(work / "variant_a" / "manifest.txt");
  const Dataset train = load_dataset(work / "variant_b" / "train" / "manifest.txt");
  const Dataset test = load_dataset(work / "variant_b" / "test" / "manifest.txt");

  InitAblationSetup setup;
  setup.target.train = protocol();
  setup.target.model.num_classes = train.num_classes();
  setup.target.model.set_gft_stages({"conv2_x"});
  setup.target.train_data = &train;
  setup.target.test_data = &test;
  setup.target.seeds = kSeeds;
  setup.pretrain_data = &pre;
  setup.pretrain = protocol();
  setup.pretrain.epochs = 20;
  const auto rows = run_init_ablation(setup);

  const AblationRow& random = row(rows, "random");
  const AblationRow& synthetic = row(rows, "synthetic");
  int wins = 0;
  for (std::size_t i = 0; i < random.mean_iou.size(); ++i) wins += synthetic.mean_iou[i] > random.mean_iou[i];
  const double r = 100 * random.mean_miou();
  const double s = 100 * synthetic.mean_miou();
  return {6, s > r && wins >= 3,
          "mean mIoU pretrained-on-A " + fixed(s) + " > random init " + fixed(r) + ", wins " +
              std::to_string(wins) + "/5 (>= 3); per seed A->B " + per_seed(synthetic) + ", random " +
              per_seed(random)};
}

Verdict overfit_sanity(const fs::path& work) {
  // At 64 x 64 an output stride of 8 leaves an 8 x 8 logit grid, too coarse
  // for the thinnest objects regardless of training; 128 x 128 scenes keep the
  // same geometry on a 16 x 16 grid.
  SynthSceneSpec spec;
  spec.height = spec.width = 128;
  thermogen(spec, 4, kDataSeed, work / "overfit", "train");
  const Dataset four = load_dataset(work / "overfit" / "manifest.txt");
  ModelConfig mc;
  mc.num_classes = four.num_classes();
  mc.set_gft_stages({"conv2_x"});
  Model model = Model::build(mc);
  TrainConfig t;
  t.epochs = 200;
  t.batch_size = 4;
  t.crop_size = 0;
  t.augment = false;
  t.mirror = false;
  t.base_lr = 0.1;
  t.eval_every = 10;
  const StageResult r = train_stage(model, four, t);
  int reached = 0;
  for (const auto& h : r.history) {
    if (!std::isnan(h.mean_iou) && h.mean_iou >= 0.95) {
      reached = h.epoch;
      break;
    }
  }
  return {7, reached > 0,
          "best training mIoU " + fixed(r.best_miou, 4) + " (>= 0.95) at epoch " + std::to_string(r.best_epoch) +
              (reached ? ", first reached at epoch " + std::to_string(reached) : ", threshold not reached") +
              " of 200"};
}

Verdict benchmark_harness(const ExperimentData& data, const fs::path& work) {
  std::ofstream cfg(work / "bench.ini");
  cfg << "[bench]\nwarmup = 3\nreps = 15\n";
  cfg.close();
  CommandRequest req;
  req.command = "bench";
  req.config = work / "bench.ini";
  req.data = data.test_manifest;
  req.out = work / "bench";
  std::ostringstream out, err;
  const int code = run_command(req, out, err);
  std::ifstream csv(work / "bench" / "bench.csv");
  std::string line;
  std::vector<std::pair<std::string, double>> rows;
  std::getline(csv, line);
  const bool header_ok = line == "config,mean_s,median_s";
  while (std::getline(csv, line)) {
    std::istringstream ls(line);
    std::string name, mean;
    std::getline(ls, name, ',');
    std::getline(ls, mean, ',');
    rows.emplace_back(name, std::stod(mean));
  }
  if (code != kExitOk || !header_ok || rows.size() < 2 || rows.front().first != "baseline") {
    return {8, false, "bench failed (exit " + std::to_string(code) + "): " + err.str()};
  }
  const double base = rows.front().second;
  bool measurable = true;
  double conv2 = -1;
  std::string detail = "baseline " + fixed(base * 1e3, 3) + " ms/image";
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double overhead = 100 * (rows[i].second - base) / base;
    measurable = measurable && overhead > 0;
    if (rows[i].first == "conv2_x") conv2 = overhead;
    detail += ", " + rows[i].first + " +" + fixed(overhead, 1) + "%";
  }
  detail += " (every GFT config > 0%, conv2_x < 100%)";
  return {8, measurable && conv2 >= 0 && conv2 < 100, detail};
}

}  // namespace acceptance
