#include <fstream>
#include <iostream>
#include <sstream>

#include "eccnn/ablation.hpp"
#include "eccnn/bench.hpp"
#include "eccnn/commands.hpp"
#include "eccnn/errors.hpp"
#include "eccnn/gradcheck.hpp"

ECCNN_BEGIN_NAMESPACE

namespace fs = std::filesystem;

namespace {

// Typed views of the configuration. Every value consumed is written back
// into `resolved`, which is echoed and stored with the artifacts.
class Session {
 public:
  Session(const CommandRequest& req, std::ostream& out, std::ostream& err)
      : req_(req), raw_(resolve_config(req)), out_(out), err_(err) {
    for (const auto& sec : raw_.sections()) {
      const std::string& n = sec.name();
      const bool known = n == "data" || n == "model" || n == "train" || n == "pretrain" ||
                         n == "paths" || n == "ablate" || n == "bench" || n == "gradcheck" ||
                         n == "run" || n.rfind("stage.", 0) == 0;
      if (n.empty() && !sec.items().empty()) {
        throw ValidationError("configuration keys must sit inside a [section]");
      }
      if (!n.empty() && !known) throw ValidationError("unknown configuration section [" + n + "]");
    }
    raw("paths").require_known({"train", "val", "test", "pretrain"});
  }

  const ConfigFile& raw_file() const { return raw_; }

  const CommandRequest& req() const { return req_; }
  std::ostream& out() { return out_; }
  std::ostream& err() { return err_; }

  const ConfigSection& raw(const std::string& name) {
    if (const ConfigSection* s = raw_.find(name)) return *s;
    return empty_;
  }
  ConfigSection& resolved(const std::string& name) { return resolved_.section(name); }

  ModelConfig model_config(std::optional<int> num_classes = std::nullopt) {
    const ConfigSection& s = raw("model");
    ModelConfig mc = ModelConfig::from_section(s);
    if (num_classes && !s.has("num_classes")) mc.num_classes = *num_classes;
    mc.validate();
    mc.write_section(resolved("model"));
    return mc;
  }

  TrainConfig train_config(const std::string& section = "train") {
    TrainConfig tc = TrainConfig::from_section(raw("train"));
    if (section != "train") {
      ConfigSection merged = raw("train");
      for (const auto& [k, v] : raw(section).items()) merged.set(k, v);
      tc = TrainConfig::from_section(merged);
    }
    tc.write_section(resolved(section));
    return tc;
  }

  SynthSceneSpec scene_spec() {
    ConfigSection s = raw("data");
    ConfigSection spec_only("data");
    for (const auto& [k, v] : s.items()) {
      if (k != "train_count" && k != "test_count" && k != "seed" && k != "write_edges") spec_only.set(k, v);
    }
    spec_only.require_known({"height", "width", "min_objects", "max_objects", "min_extent",
                             "max_extent", "shapes", "class_names", "class_intensity",
                             "intensity_jitter", "background_ramp", "crossover_rate",
                             "blur_sigma", "noise_sigma"});
    SynthSceneSpec spec = SynthSceneSpec::from_section(spec_only);
    spec.write_section(resolved("data"));
    return spec;
  }

  // Manifest from --data, else [paths] <key>.
  fs::path manifest_path(const std::string& key, bool prefer_flag = true) {
    fs::path p;
    if (prefer_flag && req_.data) {
      p = *req_.data;
    } else if (auto v = raw("paths").get(key)) {
      p = *v;
    } else {
      throw UsageError("no dataset: pass --data or set [paths] " + key);
    }
    resolved("paths").set(key, p.string());
    return p;
  }

  std::optional<fs::path> optional_path(const std::string& key) {
    if (auto v = raw("paths").get(key)) {
      resolved("paths").set(key, *v);
      return fs::path(*v);
    }
    return std::nullopt;
  }

  Dataset load(const fs::path& manifest_path) {
    const DatasetManifest m = load_manifest(manifest_path);
    const std::string mode = req_.edges.value_or("computed");
    resolved("run").set("edges", mode);
    if (mode == "computed") return load_dataset(m, false);
    if (mode == "manifest") return load_dataset(m, true);
    Dataset ds = load_dataset(m, false);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const Shape& s = ds.samples[i].image.shape();
      ds.samples[i].edges = load_edge_maps(edge_file_for(m.entries[i].image), s.h, s.w);
    }
    return ds;
  }

  fs::path edge_file_for(const fs::path& image) const {
    const fs::path e(*req_.edges);
    return fs::is_directory(e) ? e / (image.stem().string() + ".ecm") : e;
  }

  fs::path out_dir(const std::string& fallback) {
    const fs::path dir = req_.out.value_or(fs::path(fallback));
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    resolved("run").set("out", dir.string());
    return dir;
  }

  // Echo and store the resolved configuration.
  void publish(const fs::path& dir) {
    resolved("run").set("command", req_.command);
    resolved("run").set("precision", std::to_string(kPrecisionBits));
    out_ << "# resolved configuration\n" << resolved_.str() << "\n";
    resolved_.save(dir / "config.ini");
  }

 private:
  const CommandRequest& req_;
  ConfigFile raw_;
  ConfigFile resolved_;
  ConfigSection empty_;
  std::ostream& out_;
  std::ostream& err_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

std::uint64_t data_seed(Session& s) {
  const auto seed = static_cast<std::uint64_t>(s.raw("data").get_int("seed", 1));
  s.resolved("data").set("seed", std::to_string(seed));
  return seed;
}

// Test scenes draw from a disjoint seed range.
constexpr std::uint64_t kTestSeedOffset = 1000000;

int cmd_gen(Session& s) {
  const SynthSceneSpec spec = s.scene_spec();
  const std::uint64_t seed = data_seed(s);
  const int train_count = static_cast<int>(s.raw("data").get_int("train_count", 200));
  const int test_count = static_cast<int>(s.raw("data").get_int("test_count", 100));
  const bool write_edges = s.raw("data").get_bool("write_edges", false);
  s.resolved("data").set("train_count", std::to_string(train_count));
  s.resolved("data").set("test_count", std::to_string(test_count));
  s.resolved("data").set("write_edges", write_edges ? "true" : "false");
  const fs::path dir = s.out_dir("data");
  s.publish(dir);

  struct Split {
    const char* name;
    int count;
    std::uint64_t seed;
  };
  for (const Split& sp : {Split{"train", train_count, seed}, Split{"test", test_count, seed + kTestSeedOffset}}) {
    if (sp.count < 1) continue;
    const fs::path split_dir = dir / sp.name;
    DatasetManifest m = thermogen(spec, sp.count, sp.seed, split_dir, sp.name);
    if (write_edges) {
      fs::create_directories(split_dir / "edges");
      for (auto& e : m.entries) {
        const fs::path ef = split_dir / "edges" / (e.image.stem().string() + ".ecm");
        save_edge_maps(hierarchical_edges(read_image(e.image)), ef);
        e.edges = ef;
      }
      save_manifest(m, split_dir / "manifest.txt");
    }
    s.out() << "wrote " << sp.count << " " << sp.name << " scenes to " << (split_dir / "manifest.txt").string() << "\n";
  }
  return kExitOk;
}

int cmd_train(Session& s) {
  bool progressive = false;
  for (const auto& sec : s.raw_file().sections()) {
    if (sec.name().rfind("stage.", 0) == 0) progressive = true;
  }
  const TrainConfig tc = s.train_config();
  if (progressive) {
    const StagePlan plan = StagePlan::from_config(s.raw_file());
    std::vector<Dataset> data;
    for (const auto& st : plan.stages) data.push_back(s.load(st.dataset));
    const ModelConfig mc = s.model_config(data.front().num_classes());
    ConfigFile tmp;
    plan.write(tmp);
    for (const auto& sec : tmp.sections()) {
      for (const auto& [k, v] : sec.items()) s.resolved(sec.name()).set(k, v);
    }
    const fs::path dir = s.out_dir("run");
    s.publish(dir);
    std::vector<const Dataset*> ptrs;
    for (const auto& d : data) ptrs.push_back(&d);
    ProgressiveResult r = progressive_train(plan, ptrs, mc, tc);
    for (std::size_t i = 0; i < r.stages.size(); ++i) {
      write_text(dir / ("history_" + plan.stages[i].name + ".csv"), history_csv(r.stages[i].history));
      const auto& last = r.stages[i].history.back();
      s.out() << "stage " << plan.stages[i].name << ": loss " << last.loss << " miou " << last.mean_iou << "\n";
    }
    r.model.to_checkpoint().save(dir / "model.ckpt");
    r.stages.back().best.save(dir / "best.ckpt");
    return kExitOk;
  }

  const Dataset train = s.load(s.manifest_path("train"));
  std::optional<Dataset> val, test;
  if (auto p = s.optional_path("val")) val = s.load(*p);
  if (auto p = s.optional_path("test")) test = s.load(*p);
  const ModelConfig mc = s.model_config(train.num_classes());
  const fs::path dir = s.out_dir("run");
  s.publish(dir);
  Model model = Model::build(mc);
  if (s.req().checkpoint) model.load_checkpoint(Checkpoint::load(*s.req().checkpoint));
  const StageResult r = train_stage(model, train, tc, val ? &*val : nullptr);
  write_text(dir / "history.csv", history_csv(r.history));
  model.to_checkpoint().save(dir / "model.ckpt");
  r.best.save(dir / "best.ckpt");
  const auto& last = r.history.back();
  s.out() << "final loss " << last.loss << ", train-eval miou " << last.mean_iou << " (best " << r.best_miou
          << " at epoch " << r.best_epoch << ")\n";
  if (test) {
    const EvalSummary e = summarize(evaluate(model, *test, tc.batch_size));
    s.out() << "test pixacc " << e.pixel_accuracy << " miou " << e.mean_iou << "\n";
  }
  return kExitOk;
}

Model load_model(Session& s, int num_classes) {
  if (!s.req().checkpoint) throw UsageError(s.req().command + " needs --checkpoint");
  const ModelConfig mc = s.model_config(num_classes);
  Model model = Model::build(mc);
  model.load_checkpoint(Checkpoint::load(*s.req().checkpoint));
  s.resolved("run").set("checkpoint", s.req().checkpoint->string());
  return model;
}

int cmd_eval(Session& s) {
  const fs::path manifest = s.manifest_path("test");
  ConfusionMatrix cm(2);
  std::vector<std::string> names;
  if (s.req().predictions) {
    // Precomputed masks named after the image stems.
    const DatasetManifest m = load_manifest(manifest);
    names = m.class_names;
    s.resolved("run").set("predictions", s.req().predictions->string());
    const fs::path dir = s.out_dir("eval");
    s.publish(dir);
    cm = ConfusionMatrix(m.num_classes());
    for (const auto& e : m.entries) {
      const LabelMap truth = read_mask(e.mask, m.num_classes());
      const LabelMap pred = read_mask(*s.req().predictions / (e.image.stem().string() + ".pgm"), m.num_classes());
      cm.accumulate(pred, truth);
    }
    const std::string report = evaluation_report_csv(summarize(cm), names);
    write_text(dir / "report.csv", report);
    s.out() << report;
    return kExitOk;
  }
  const Dataset data = s.load(manifest);
  names = data.class_names;
  Model model = load_model(s, data.num_classes());
  const fs::path dir = s.out_dir("eval");
  s.publish(dir);
  const std::string report = evaluation_report_csv(summarize(evaluate(model, data)), names);
  write_text(dir / "report.csv", report);
  s.out() << report;
  return kExitOk;
}

int cmd_infer(Session& s) {
  struct Item {
    std::string stem;
    Sample sample;
  };
  std::vector<Item> items;
  std::optional<int> classes;
  if (s.req().input) {
    Sample smp;
    smp.image = read_image(*s.req().input);
    if (s.req().edges && *s.req().edges != "computed") {
      smp.edges = load_edge_maps(s.edge_file_for(*s.req().input), smp.image.shape().h, smp.image.shape().w);
    }
    items.push_back({s.req().input->stem().string(), std::move(smp)});
    s.resolved("run").set("input", s.req().input->string());
  } else {
    const fs::path mp = s.manifest_path("test");
    const DatasetManifest m = load_manifest(mp);
    Dataset data = s.load(mp);
    classes = data.num_classes();
    for (std::size_t i = 0; i < data.size(); ++i) {
      items.push_back({m.entries[i].image.stem().string(), std::move(data.samples[i])});
    }
  }
  Model model = load_model(s, classes.value_or(ModelConfig{}.num_classes));
  const fs::path dir = s.out_dir("infer");
  s.publish(dir);
  fs::create_directories(dir / "masks");
  fs::create_directories(dir / "overlays");
  NoGradGuard no_grad;
  const bool with_edges = !model.config().gft_stages.empty();
  for (const auto& it : items) {
    const EdgeStack edges = with_edges ? sample_edges(it.sample) : EdgeStack{};
    const LabelMap pred = argmax_channels(model.forward(it.sample.image, edges, Mode::eval));
    write_mask(pred, dir / "masks" / (it.stem + ".pgm"));
    write_overlay(tensor_to_image(it.sample.image), pred, dir / "overlays" / (it.stem + ".ppm"));
  }
  s.out() << "wrote " << items.size() << " masks and overlays to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_gradcheck(Session& s) {
  const auto seed = static_cast<std::uint64_t>(s.raw("gradcheck").get_int("seed", s.req().seed.value_or(7)));
  s.resolved("gradcheck").set("seed", std::to_string(seed));
  const fs::path dir = s.out_dir("gradcheck");
  s.publish(dir);
  if (kPrecisionBits != 64) s.err() << "warning: finite differences need the 64-bit build\n";
  const auto results = gradcheck_suite(seed);
  const std::string table = gradcheck_table(results);
  write_text(dir / "gradcheck.csv", table);
  s.out() << table;
  for (const auto& r : results) {
    if (!r.pass()) return kExitValidation;
  }
  return kExitOk;
}

std::vector<std::uint64_t> ablation_seeds(Session& s) {
  std::vector<std::uint64_t> seeds;
  for (int v : s.raw("ablate").get_int_list("seeds", {1, 2, 3, 4, 5})) seeds.push_back(static_cast<std::uint64_t>(v));
  std::vector<int> as_int(seeds.begin(), seeds.end());
  s.resolved("ablate").set("seeds", join_ints(as_int));
  return seeds;
}

int cmd_ablate(Session& s) {
  if (!s.req().axis) throw UsageError("ablate needs --axis conditioning|stage|init");
  const std::string axis = *s.req().axis;
  s.raw("ablate").require_known({"seeds", "stages"});
  const Dataset train = s.load(s.manifest_path("train", false));
  const Dataset test = s.load(s.manifest_path("test", false));
  AblationSetup setup;
  setup.train = s.train_config();
  setup.model = s.model_config(train.num_classes());
  setup.train_data = &train;
  setup.test_data = &test;
  setup.seeds = ablation_seeds(s);
  setup.on_run = [&s](const std::string& config, std::uint64_t seed, double miou) {
    s.out() << "  " << config << " seed " << seed << ": miou " << miou << "\n" << std::flush;
  };

  std::vector<AblationRow> rows;
  if (axis == "conditioning") {
    const auto stages = s.raw("ablate").get_list("stages", {"conv2_x"});
    s.resolved("ablate").set("stages", join(stages, ","));
    const fs::path dir = s.out_dir("ablate");
    s.publish(dir);
    rows = run_ablation(setup, conditioning_variants(stages));
  } else if (axis == "stage") {
    const fs::path dir = s.out_dir("ablate");
    s.publish(dir);
    rows = run_ablation(setup, stage_variants());
  } else if (axis == "init") {
    const Dataset pre = s.load(s.manifest_path("pretrain", false));
    InitAblationSetup init{setup, &pre, s.train_config("pretrain")};
    const fs::path dir = s.out_dir("ablate");
    s.publish(dir);
    rows = run_init_ablation(init);
  } else {
    throw UsageError("unknown --axis '" + axis + "' (expected conditioning, stage or init)");
  }
  const std::string csv = ablation_csv(rows);
  write_text(s.out_dir("ablate") / ("ablation_" + axis + ".csv"), csv);
  s.out() << csv;
  return kExitOk;
}

int cmd_bench(Session& s) {
  const ConfigSection& b = s.raw("bench");
  b.require_known({"warmup", "reps", "images"});
  const int warmup = static_cast<int>(b.get_int("warmup", 2));
  const int reps = static_cast<int>(b.get_int("reps", 5));
  const int images = static_cast<int>(b.get_int("images", 8));
  s.resolved("bench").set("warmup", std::to_string(warmup));
  s.resolved("bench").set("reps", std::to_string(reps));
  Dataset data;
  if (s.req().data || s.raw("paths").has("test")) {
    data = s.load(s.manifest_path("test"));
  } else {
    const SynthSceneSpec spec = s.scene_spec();
    const std::uint64_t seed = data_seed(s);
    s.resolved("bench").set("images", std::to_string(images));
    if (images < 1) throw ValidationError("bench: images must be at least 1");
    data.class_names = spec.class_names;
    for (int i = 0; i < images; ++i) {
      const Scene scene = render_scene(spec, seed + kTestSeedOffset + static_cast<std::uint64_t>(i));
      data.samples.push_back({image_to_tensor(scene.image), scene.mask, std::nullopt});
    }
  }
  const ModelConfig mc = s.model_config(data.num_classes());
  const fs::path dir = s.out_dir("bench");
  s.publish(dir);
  const auto rows = benchmark_inference(mc, data, default_placements(), warmup, reps);
  const std::string csv = bench_csv(rows);
  write_text(dir / "bench.csv", csv);
  s.out() << csv;
  return kExitOk;
}

int cmd_stats(Session& s) {
  const DatasetManifest m = load_manifest(s.manifest_path("train"));
  const fs::path dir = s.out_dir("stats");
  s.publish(dir);
  const std::string csv = class_statistics_csv(class_statistics(m), m.class_names);
  write_text(dir / "stats.csv", csv);
  s.out() << csv;
  return kExitOk;
}

}  // namespace

int run_command(const CommandRequest& request, std::ostream& out, std::ostream& err) {
  try {
    Session s(request, out, err);
    const std::string& c = request.command;
    if (c == "gen") return cmd_gen(s);
    if (c == "train") return cmd_train(s);
    if (c == "eval") return cmd_eval(s);
    if (c == "infer") return cmd_infer(s);
    if (c == "gradcheck") return cmd_gradcheck(s);
    if (c == "ablate") return cmd_ablate(s);
    if (c == "bench") return cmd_bench(s);
    if (c == "stats") return cmd_stats(s);
    throw UsageError("unknown command '" + c + "'");
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ShapeError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const FormatError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

ECCNN_END_NAMESPACE
