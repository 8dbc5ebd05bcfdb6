#include "eccnn/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "eccnn/errors.hpp"

ECCNN_BEGIN_NAMESPACE

double poly_lr(double base, long long iter, long long max_iter, double power) {
  if (max_iter <= 0) throw ValidationError("poly_lr: max_iter must be positive");
  if (iter < 0 || iter > max_iter) {
    throw ValidationError("poly_lr: iter " + std::to_string(iter) + " outside [0, " +
                          std::to_string(max_iter) + "]");
  }
  return base * std::pow(1.0 - static_cast<double>(iter) / static_cast<double>(max_iter), power);
}

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(base_lr >= 0)) throw ValidationError("base_lr must be non-negative");
  if (!(power > 0)) throw ValidationError("power must be positive");
  if (momentum < 0 || momentum >= 1) throw ValidationError("momentum must lie in [0, 1)");
  if (weight_decay < 0) throw ValidationError("weight_decay must be non-negative");
  if (epochs < 1) throw ValidationError("epochs must be at least 1");
  if (batch_size < 1) throw ValidationError("batch_size must be at least 1");
  if (crop_size < 0 || (crop_size > 0 && crop_size < 8)) {
    throw ValidationError("crop_size must be 0 (full image) or at least 8");
  }
  if (!(scale_min > 0 && scale_min < scale_max)) throw ValidationError("scale range must satisfy 0 < min < max");
  if (eval_every < 0) throw ValidationError("eval_every must be non-negative");
}

TrainConfig TrainConfig::from_section(const ConfigSection& section) {
  return from_section(section, TrainConfig{});
}

TrainConfig TrainConfig::from_section(const ConfigSection& s, TrainConfig d) {
  s.require_known({"base_lr", "power", "momentum", "weight_decay", "epochs", "batch_size",
                   "crop_size", "scale_min", "scale_max", "mirror", "augment", "eval_every",
                   "seed"});
  d.base_lr = s.get_double("base_lr", d.base_lr);
  d.power = s.get_double("power", d.power);
  d.momentum = s.get_double("momentum", d.momentum);
  d.weight_decay = s.get_double("weight_decay", d.weight_decay);
  d.epochs = static_cast<int>(s.get_int("epochs", d.epochs));
  d.batch_size = static_cast<int>(s.get_int("batch_size", d.batch_size));
  d.crop_size = static_cast<int>(s.get_int("crop_size", d.crop_size));
  d.scale_min = s.get_double("scale_min", d.scale_min);
  d.scale_max = s.get_double("scale_max", d.scale_max);
  d.mirror = s.get_bool("mirror", d.mirror);
  d.augment = s.get_bool("augment", d.augment);
  d.eval_every = static_cast<int>(s.get_int("eval_every", d.eval_every));
  d.seed = static_cast<std::uint64_t>(s.get_int("seed", static_cast<long long>(d.seed)));
  d.validate();
  return d;
}

void TrainConfig::write_section(ConfigSection& s) const {
  s.set("base_lr", format_double(base_lr));
  s.set("power", format_double(power));
  s.set("momentum", format_double(momentum));
  s.set("weight_decay", format_double(weight_decay));
  s.set("epochs", std::to_string(epochs));
  s.set("batch_size", std::to_string(batch_size));
  s.set("crop_size", std::to_string(crop_size));
  s.set("scale_min", format_double(scale_min));
  s.set("scale_max", format_double(scale_max));
  s.set("mirror", mirror ? "true" : "false");
  s.set("augment", augment ? "true" : "false");
  s.set("eval_every", std::to_string(eval_every));
  s.set("seed", std::to_string(seed));
}

AugmentParams sample_augment(int h, int w, const TrainConfig& config, Rng& rng) {
  if (!config.augment) return AugmentParams::identity(h, w);
  AugmentParams p;
  p.mirror = config.mirror && rng.bernoulli(0.5);
  const double scale = rng.uniform(config.scale_min, config.scale_max);
  p.scaled_h = std::max(1, static_cast<int>(std::lround(h * scale)));
  p.scaled_w = std::max(1, static_cast<int>(std::lround(w * scale)));
  p.out_h = config.crop_size > 0 ? config.crop_size : h;
  p.out_w = config.crop_size > 0 ? config.crop_size : w;
  p.crop_y = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(std::max(p.scaled_h, p.out_h) - p.out_h + 1)));
  p.crop_x = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(std::max(p.scaled_w, p.out_w) - p.out_w + 1)));
  return p;
}

namespace {

// Resample (bilinear), mirror, then crop/pad one plane.
std::vector<Real> transform_plane(std::span<const Real> src, int h, int w, int sh, int sw, bool mirror,
                                  int cy, int cx, int oh, int ow) {
  const std::vector<Real> scaled = (sh == h && sw == w) ? std::vector<Real>(src.begin(), src.end())
                                                        : resize_plane(src, h, w, sh, sw);
  std::vector<Real> out(static_cast<std::size_t>(oh) * ow, Real(0));
  for (int y = 0; y < oh; ++y) {
    const int sy = y + cy;
    if (sy >= sh) break;
    for (int x = 0; x < ow; ++x) {
      const int sx = x + cx;
      if (sx >= sw) break;
      const int col = mirror ? sw - 1 - sx : sx;
      out[static_cast<std::size_t>(y) * ow + x] = scaled[static_cast<std::size_t>(sy) * sw + col];
    }
  }
  return out;
}

}  // namespace

Augmented apply_augment(const Sample& sample, const AugmentParams& p) {
  const Shape& s = sample.image.shape();
  if (s.n != 1 || s.c != 1) throw ShapeError("apply_augment: expected a 1 x 1 x H x W image");
  if (sample.mask.n != 1 || sample.mask.h != s.h || sample.mask.w != s.w) {
    throw ShapeError("apply_augment: image and mask sizes differ");
  }
  const int h = s.h, w = s.w;
  Augmented out;
  out.image = Tensor::from_data(
      {1, 1, p.out_h, p.out_w},
      transform_plane(sample.image.data(), h, w, p.scaled_h, p.scaled_w, p.mirror, p.crop_y,
                      p.crop_x, p.out_h, p.out_w));

  out.mask = LabelMap(1, p.out_h, p.out_w, kIgnoreIndex);
  for (int y = 0; y < p.out_h; ++y) {
    const int sy = y + p.crop_y;
    if (sy >= p.scaled_h) break;
    const int my = std::min(h - 1, static_cast<int>((sy + 0.5) * h / p.scaled_h));
    for (int x = 0; x < p.out_w; ++x) {
      const int sx = x + p.crop_x;
      if (sx >= p.scaled_w) break;
      const int col = p.mirror ? p.scaled_w - 1 - sx : sx;
      const int mx = std::min(w - 1, static_cast<int>((col + 0.5) * w / p.scaled_w));
      out.mask.at(0, y, x) = sample.mask.at(0, my, mx);
    }
  }

  if (sample.edges) {
    // Loaded maps follow the same transform at each scale's resolution.
    EdgeStack e;
    e.source = EdgeSource::loaded;
    for (int i = 0; i < static_cast<int>(sample.edges->scales.size()); ++i) {
      const Tensor& src = sample.edges->scales[i];
      const int eh = src.shape().h, ew = src.shape().w;
      const int oh = edge_scale_dim(p.out_h, i), ow = edge_scale_dim(p.out_w, i);
      e.scales.push_back(Tensor::from_data(
          {1, 1, oh, ow},
          transform_plane(src.data(), eh, ew, edge_scale_dim(p.scaled_h, i),
                          edge_scale_dim(p.scaled_w, i), p.mirror, p.crop_y >> i, p.crop_x >> i, oh,
                          ow)));
    }
    out.edges = std::move(e);
  }
  return out;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os << "epoch,loss,pixacc,miou\n";
  char buf[96];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,", r.epoch, r.loss);
    os << buf;
    if (std::isnan(r.mean_iou)) {
      os << ",\n";
    } else {
      std::snprintf(buf, sizeof buf, "%.6f,%.6f\n", r.pixel_accuracy, r.mean_iou);
      os << buf;
    }
  }
  return os.str();
}

namespace {

bool needs_edges(const Model& model) { return !model.config().gft_stages.empty(); }

struct Batch {
  Tensor image;
  LabelMap mask;
  EdgeStack edges;
};

Batch make_batch(std::vector<Augmented>& parts, bool with_edges) {
  const Shape s = parts.front().image.shape();
  const int n = static_cast<int>(parts.size());
  Batch b;
  std::vector<Real> data;
  data.reserve(static_cast<std::size_t>(n) * s.plane());
  b.mask = LabelMap(n, s.h, s.w);
  for (int i = 0; i < n; ++i) {
    const auto& a = parts[i];
    if (a.image.shape().h != s.h || a.image.shape().w != s.w) {
      throw ShapeError("batch images differ in size; set crop_size to batch mixed sizes");
    }
    const auto px = a.image.data();
    data.insert(data.end(), px.begin(), px.end());
    std::copy(a.mask.values.begin(), a.mask.values.end(),
              b.mask.values.begin() + static_cast<std::ptrdiff_t>(i) * s.plane());
  }
  b.image = Tensor::from_data({n, 1, s.h, s.w}, std::move(data));
  if (with_edges) {
    const bool any_loaded = std::any_of(parts.begin(), parts.end(), [](const Augmented& a) { return a.edges.has_value(); });
    if (!any_loaded) {
      b.edges = hierarchical_edges(b.image);
    } else {
      std::vector<EdgeStack> stacks;
      for (auto& a : parts) stacks.push_back(a.edges ? *a.edges : hierarchical_edges(a.image));
      b.edges = stack_edges(stacks);
    }
  }
  return b;
}

std::vector<int> permutation(int n, Rng& rng) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[i], order[j]);
  }
  return order;
}

}  // namespace

ConfusionMatrix evaluate(const Model& model, const Dataset& data, int batch_size) {
  if (data.size() == 0) throw ValidationError("evaluate: empty dataset");
  ConfusionMatrix cm(model.config().num_classes);
  NoGradGuard no_grad;
  const bool with_edges = needs_edges(model);
  std::size_t i = 0;
  while (i < data.size()) {
    std::vector<Augmented> parts;
    const Shape first = data.samples[i].image.shape();
    while (i < data.size() && static_cast<int>(parts.size()) < batch_size &&
           data.samples[i].image.shape().h == first.h && data.samples[i].image.shape().w == first.w) {
      const Sample& s = data.samples[i];
      parts.push_back({s.image, s.mask, s.edges});
      ++i;
    }
    const Batch b = make_batch(parts, with_edges);
    cm.accumulate(argmax_channels(model.forward(b.image, b.edges, Mode::eval)), b.mask);
  }
  return cm;
}

StageResult train_stage(Model& model, const Dataset& train, const TrainConfig& config,
                        const Dataset* eval_data) {
  config.validate();
  if (train.size() == 0) throw ValidationError("train_stage: empty dataset");
  if (train.num_classes() != model.config().num_classes) {
    throw ValidationError("train_stage: dataset has " + std::to_string(train.num_classes()) +
                          " classes but the model predicts " +
                          std::to_string(model.config().num_classes) + "; reset the classifier first");
  }
  const Dataset& eval_set = eval_data ? *eval_data : train;
  const int n = static_cast<int>(train.size());
  const int batch = std::min(config.batch_size, n);
  const int batches_per_epoch = (n + batch - 1) / batch;
  const long long max_iter = static_cast<long long>(config.epochs) * batches_per_epoch;
  const bool with_edges = needs_edges(model);

  std::vector<Parameter> params = model.parameters();
  StageResult result;
  long long iter = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(config.seed, "shuffle/" + std::to_string(epoch)));
    Rng augment_rng(derive_seed(config.seed, "augment/" + std::to_string(epoch)));
    const std::vector<int> order = permutation(n, shuffle_rng);
    double epoch_loss = 0;
    for (int start = 0; start < n; start += batch) {
      std::vector<Augmented> parts;
      for (int j = start; j < std::min(n, start + batch); ++j) {
        const Sample& s = train.samples[order[j]];
        const AugmentParams ap = sample_augment(s.image.shape().h, s.image.shape().w, config, augment_rng);
        parts.push_back(apply_augment(s, ap));
      }
      const Batch b = make_batch(parts, with_edges);
      const Tensor loss = cross_entropy_loss(model.forward(b.image, b.edges, Mode::train), b.mask);
      backward(loss);
      const double value = static_cast<double>(loss.item());
      result.iteration_loss.push_back(value);
      epoch_loss += value;
      const double lr = poly_lr(config.base_lr, iter, max_iter, config.power);
      sgd_step(params, {static_cast<Real>(lr), static_cast<Real>(config.momentum),
                        static_cast<Real>(config.weight_decay)});
      ++iter;
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.loss = epoch_loss / batches_per_epoch;
    rec.pixel_accuracy = rec.mean_iou = std::numeric_limits<double>::quiet_NaN();
    const bool last = epoch + 1 == config.epochs;
    if (last || (config.eval_every > 0 && (epoch + 1) % config.eval_every == 0)) {
      const EvalSummary summary = summarize(evaluate(model, eval_set, config.batch_size));
      rec.pixel_accuracy = summary.pixel_accuracy;
      rec.mean_iou = summary.mean_iou;
      if (summary.mean_iou > result.best_miou) {
        result.best_miou = summary.mean_iou;
        result.best_epoch = rec.epoch;
        result.best = model.to_checkpoint();
      }
    }
    result.history.push_back(rec);
  }
  return result;
}

StagePlan StagePlan::from_config(const ConfigFile& file) {
  StagePlan plan;
  for (const auto& section : file.sections()) {
    if (section.name().rfind("stage.", 0) != 0) continue;
    section.require_known({"init", "dataset", "epochs", "reset_classifier", "base_lr"});
    StageSpec st;
    st.name = section.name().substr(6);
    st.init = section.get_string("init", plan.stages.empty() ? "random" : "previous");
    const std::string dataset = section.get_string("dataset", "");
    if (dataset.empty()) throw ValidationError("stage '" + st.name + "' has no dataset");
    st.dataset = dataset;
    st.epochs = static_cast<int>(section.get_int("epochs", 0));
    st.reset_classifier = section.get_bool("reset_classifier", false);
    if (section.has("base_lr")) st.base_lr = section.get_double("base_lr", 0);
    if (st.epochs < 0) throw ValidationError("stage '" + st.name + "': epochs must be non-negative");
    plan.stages.push_back(std::move(st));
  }
  if (plan.stages.empty()) throw ValidationError("stage plan has no [stage.<name>] sections");
  return plan;
}

void StagePlan::write(ConfigFile& file) const {
  for (const auto& st : stages) {
    ConfigSection& s = file.section("stage." + st.name);
    s.set("init", st.init);
    s.set("dataset", st.dataset.string());
    s.set("epochs", std::to_string(st.epochs));
    s.set("reset_classifier", st.reset_classifier ? "true" : "false");
    if (st.base_lr) s.set("base_lr", format_double(*st.base_lr));
  }
}

ProgressiveResult progressive_train(const StagePlan& plan, const ModelConfig& model_config,
                                    const TrainConfig& config) {
  std::vector<Dataset> loaded;
  loaded.reserve(plan.stages.size());
  for (const auto& st : plan.stages) loaded.push_back(load_dataset(st.dataset));
  std::vector<const Dataset*> ptrs;
  for (const auto& d : loaded) ptrs.push_back(&d);
  return progressive_train(plan, ptrs, model_config, config);
}

ProgressiveResult progressive_train(const StagePlan& plan, const std::vector<const Dataset*>& data,
                                    const ModelConfig& model_config, const TrainConfig& config) {
  if (plan.stages.empty()) throw ValidationError("progressive_train: plan has no stages");
  if (data.size() != plan.stages.size()) throw ValidationError("progressive_train: one dataset per stage required");

  std::optional<Model> model;
  std::vector<StageResult> results;
  int prev_classes = 0;
  for (std::size_t i = 0; i < plan.stages.size(); ++i) {
    const StageSpec& st = plan.stages[i];
    const Dataset& ds = *data[i];
    const int k = ds.num_classes();
    if (i > 0 && k != prev_classes && !st.reset_classifier) {
      throw ValidationError("stage '" + st.name + "' changes the class count from " +
                            std::to_string(prev_classes) + " to " + std::to_string(k) +
                            " without reset_classifier");
    }
    if (st.init == "previous") {
      if (!model) throw ValidationError("stage '" + st.name + "': no previous stage to carry weights from");
    } else {
      ModelConfig mc = model_config;
      mc.num_classes = k;
      model = Model::build(mc);
      if (st.init != "random") {
        const Checkpoint ckpt = Checkpoint::load(st.init);
        try {
          model->load_checkpoint(ckpt, st.reset_classifier);
        } catch (const Error& e) {
          throw ValidationError("stage '" + st.name + "': checkpoint " + st.init +
                                " is incompatible with the model: " + e.what());
        }
      }
    }
    if (st.reset_classifier) {
      model->reset_classifier(k, derive_seed(model_config.seed, "classifier/" + st.name));
    }
    auto params = model->parameters();
    reset_momentum(params);

    TrainConfig tc = config;
    if (st.epochs > 0) tc.epochs = st.epochs;
    if (st.base_lr) tc.base_lr = *st.base_lr;
    results.push_back(train_stage(*model, ds, tc));
    prev_classes = k;
  }
  return {std::move(*model), std::move(results)};
}

ECCNN_END_NAMESPACE
