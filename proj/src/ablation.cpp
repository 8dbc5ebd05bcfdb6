#include "eccnn/ablation.hpp"

#include <cstdio>
#include <numeric>
#include <sstream>

#include "eccnn/errors.hpp"

ECCNN_BEGIN_NAMESPACE

namespace {

double average(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void check_setup(const AblationSetup& s) {
  if (!s.train_data || !s.test_data) throw ValidationError("ablation: train and test data are required");
  if (s.seeds.empty()) throw ValidationError("ablation: no seeds");
}

void add_result(AblationRow& row, std::uint64_t seed, const EvalSummary& summary,
                const AblationSetup& setup) {
  row.seeds.push_back(seed);
  row.pixel_accuracy.push_back(summary.pixel_accuracy);
  row.mean_iou.push_back(summary.mean_iou);
  if (setup.on_run) setup.on_run(row.config, seed, summary.mean_iou);
}

}  // namespace

double AblationRow::mean_pixel_accuracy() const { return average(pixel_accuracy); }
double AblationRow::mean_miou() const { return average(mean_iou); }

std::vector<AblationRow> run_ablation(const AblationSetup& setup,
                                      const std::vector<AblationVariant>& variants) {
  check_setup(setup);
  std::vector<AblationRow> rows;
  for (const auto& v : variants) rows.push_back({v.name, {}, {}, {}});
  for (std::uint64_t seed : setup.seeds) {
    for (std::size_t i = 0; i < variants.size(); ++i) {
      ModelConfig mc = setup.model;
      mc.seed = seed;
      mc.num_classes = setup.train_data->num_classes();
      variants[i].configure(mc);
      Model model = Model::build(mc);
      TrainConfig tc = setup.train;
      tc.seed = seed;
      train_stage(model, *setup.train_data, tc, nullptr);
      add_result(rows[i], seed, summarize(evaluate(model, *setup.test_data, tc.batch_size)), setup);
    }
  }
  return rows;
}

std::vector<AblationVariant> conditioning_variants(const std::vector<std::string>& stages) {
  return {
      {"baseline", [](ModelConfig& c) { c.set_gft_stages({}); }},
      {"SFT",
       [stages](ModelConfig& c) {
         c.set_gft_stages(stages);
         c.conditioning = ConditioningKind::sft;
       }},
      {"GFT",
       [stages](ModelConfig& c) {
         c.set_gft_stages(stages);
         c.conditioning = ConditioningKind::gft;
       }},
  };
}

std::vector<AblationVariant> stage_variants() {
  std::vector<AblationVariant> out{{"baseline", [](ModelConfig& c) { c.set_gft_stages({}); }}};
  for (int mask = 1; mask < (1 << kConditionableStages); ++mask) {
    std::vector<std::string> stages;
    for (int s = 0; s < kConditionableStages; ++s) {
      if (mask & (1 << s)) stages.emplace_back(kStageNames[s]);
    }
    out.push_back({join(stages, "+"), [stages](ModelConfig& c) {
                     c.set_gft_stages(stages);
                     c.conditioning = ConditioningKind::gft;
                   }});
  }
  return out;
}

std::vector<AblationRow> run_init_ablation(const InitAblationSetup& setup) {
  const AblationSetup& t = setup.target;
  check_setup(t);
  if (!setup.pretrain_data) throw ValidationError("init ablation: pretraining data is required");
  const int ka = setup.pretrain_data->num_classes();
  const int kb = t.train_data->num_classes();
  std::vector<AblationRow> rows{{"random", {}, {}, {}}, {"synthetic", {}, {}, {}}};
  const bool carry = ka == kb;
  if (carry) rows.push_back({"carry", {}, {}, {}});

  for (std::uint64_t seed : t.seeds) {
    ModelConfig mc = t.model;
    mc.seed = seed;
    TrainConfig tc = t.train;
    tc.seed = seed;
    {
      ModelConfig mb = mc;
      mb.num_classes = kb;
      Model model = Model::build(mb);
      train_stage(model, *t.train_data, tc, nullptr);
      add_result(rows[0], seed, summarize(evaluate(model, *t.test_data, tc.batch_size)), t);
    }

    ModelConfig ma = mc;
    ma.num_classes = ka;
    Model pre = Model::build(ma);
    TrainConfig pc = setup.pretrain;
    pc.seed = seed;
    train_stage(pre, *setup.pretrain_data, pc, nullptr);
    const Checkpoint pretrained = pre.to_checkpoint();

    for (std::size_t r = 1; r < rows.size(); ++r) {
      const bool reset = rows[r].config == "synthetic";
      ModelConfig mb = mc;
      mb.num_classes = reset ? ka : kb;
      Model model = Model::build(mb);
      model.load_checkpoint(pretrained, false);
      if (reset) model.reset_classifier(kb, derive_seed(seed, "classifier/finetune"));
      train_stage(model, *t.train_data, tc, nullptr);
      add_result(rows[r], seed, summarize(evaluate(model, *t.test_data, tc.batch_size)), t);
    }
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "config,pixacc,miou";
  if (!rows.empty()) {
    for (auto seed : rows.front().seeds) os << ",miou_seed" << seed;
  }
  os << "\n";
  char buf[32];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.4f,%.4f", 100 * r.mean_pixel_accuracy(), 100 * r.mean_miou());
    os << r.config << "," << buf;
    for (double m : r.mean_iou) {
      std::snprintf(buf, sizeof buf, ",%.4f", 100 * m);
      os << buf;
    }
    os << "\n";
  }
  return os.str();
}

ECCNN_END_NAMESPACE
