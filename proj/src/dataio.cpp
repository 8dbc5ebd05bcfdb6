#include "eccnn/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "eccnn/errors.hpp"
#include "eccnn/imgproc.hpp"
#include "eccnn/random.hpp"

namespace eccnn {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

fs::path resolve(const fs::path& base, const std::string& entry) {
  const fs::path p(entry);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

void require_file(const fs::path& p, const fs::path& manifest) {
  if (!fs::exists(p)) {
    throw FileNotFoundError("manifest " + manifest.string() + " references missing file " + p.string());
  }
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  const fs::path rel = fs::absolute(p).lexically_normal().lexically_relative(base);
  return rel.empty() ? p.string() : rel.generic_string();
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw FileNotFoundError("manifest not found: " + path.string());
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  const fs::path base = fs::absolute(path).parent_path();
  DatasetManifest m;
  bool have_classes = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("#!", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed directive");
      }
      const std::string key = trim(line.substr(2, eq - 2));
      const std::string value = trim(line.substr(eq + 1));
      if (key == "classes") {
        m.class_names.clear();
        for (const auto& c : split(value, ',')) m.class_names.push_back(trim(c));
        have_classes = true;
      } else if (key == "split") {
        m.split = value;
      } else {
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": unknown directive '" + key + "'");
      }
      continue;
    }
    if (trim(line).empty() || line.front() == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() < 2 || fields.size() > 3) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": expected image<TAB>mask[<TAB>edges]");
    }
    ManifestEntry e;
    e.image = resolve(base, fields[0]);
    e.mask = resolve(base, fields[1]);
    if (fields.size() == 3) e.edges = resolve(base, fields[2]);
    require_file(e.image, path);
    require_file(e.mask, path);
    if (e.edges) require_file(*e.edges, path);
    m.entries.push_back(std::move(e));
  }
  if (!have_classes || m.class_names.size() < 2) {
    throw FormatError(path.string() + ": missing '#!classes=' directive with at least two classes");
  }
  return m;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  const fs::path base = fs::absolute(path).parent_path();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << "#!split=" << manifest.split << "\n";
  out << "#!classes=" << join(manifest.class_names, ",") << "\n";
  for (const auto& e : manifest.entries) {
    out << relative_to(e.image, base) << "\t" << relative_to(e.mask, base);
    if (e.edges) out << "\t" << relative_to(*e.edges, base);
    out << "\n";
  }
  if (!out) throw IoError("failed writing manifest " + path.string());
}

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::disc: return "disc";
    case ShapeKind::rectangle: return "rectangle";
    case ShapeKind::bar: return "bar";
  }
  return "?";
}

ShapeKind parse_shape(const std::string& name) {
  if (name == "disc") return ShapeKind::disc;
  if (name == "rectangle") return ShapeKind::rectangle;
  if (name == "bar") return ShapeKind::bar;
  throw ValidationError("unknown shape '" + name + "' (expected disc, rectangle or bar)");
}

ShapeKind SynthSceneSpec::shape_for(int label) const {
  return shapes[static_cast<std::size_t>(label - 1) % shapes.size()];
}

void SynthSceneSpec::validate() const {
  if (height < 8 || width < 8) throw ValidationError("scene canvas must be at least 8x8");
  if (min_objects < 0 || max_objects < min_objects) throw ValidationError("scene object count range is invalid");
  if (!(min_extent > 0 && min_extent <= max_extent && max_extent <= 1)) {
    throw ValidationError("scene object extent range must satisfy 0 < min <= max <= 1");
  }
  if (shapes.empty()) throw ValidationError("scene shape vocabulary is empty");
  if (class_names.size() < 2 || class_names.size() > 255) {
    throw ValidationError("scene needs between 2 and 255 classes");
  }
  if (class_intensity.size() != class_names.size()) {
    throw ValidationError("class_intensity needs one value per class");
  }
  for (double v : class_intensity) {
    if (!(v >= 0 && v <= 1)) throw ValidationError("class intensities must lie in [0, 1]");
  }
  if (!(crossover_rate >= 0 && crossover_rate <= 1)) throw ValidationError("crossover_rate must lie in [0, 1]");
  if (intensity_jitter < 0 || background_ramp < 0 || blur_sigma < 0 || noise_sigma < 0) {
    throw ValidationError("jitter, ramp, blur and noise must be non-negative");
  }
}

SynthSceneSpec SynthSceneSpec::from_section(const ConfigSection& section) {
  return from_section(section, SynthSceneSpec{});
}

SynthSceneSpec SynthSceneSpec::from_section(const ConfigSection& s, SynthSceneSpec d) {
  d.height = static_cast<int>(s.get_int("height", d.height));
  d.width = static_cast<int>(s.get_int("width", d.width));
  d.min_objects = static_cast<int>(s.get_int("min_objects", d.min_objects));
  d.max_objects = static_cast<int>(s.get_int("max_objects", d.max_objects));
  d.min_extent = s.get_double("min_extent", d.min_extent);
  d.max_extent = s.get_double("max_extent", d.max_extent);
  if (s.has("shapes")) {
    d.shapes.clear();
    for (const auto& name : s.get_list("shapes", {})) d.shapes.push_back(parse_shape(name));
  }
  d.class_names = s.get_list("class_names", d.class_names);
  if (s.has("class_intensity")) {
    d.class_intensity.clear();
    for (const auto& v : s.get_list("class_intensity", {})) {
      try {
        d.class_intensity.push_back(std::stod(v));
      } catch (const std::exception&) {
        throw ValidationError("class_intensity: '" + v + "' is not a number");
      }
    }
  }
  d.intensity_jitter = s.get_double("intensity_jitter", d.intensity_jitter);
  d.background_ramp = s.get_double("background_ramp", d.background_ramp);
  d.crossover_rate = s.get_double("crossover_rate", d.crossover_rate);
  d.blur_sigma = s.get_double("blur_sigma", d.blur_sigma);
  d.noise_sigma = s.get_double("noise_sigma", d.noise_sigma);
  d.validate();
  return d;
}

void SynthSceneSpec::write_section(ConfigSection& s) const {
  s.set("height", std::to_string(height));
  s.set("width", std::to_string(width));
  s.set("min_objects", std::to_string(min_objects));
  s.set("max_objects", std::to_string(max_objects));
  s.set("min_extent", format_double(min_extent));
  s.set("max_extent", format_double(max_extent));
  std::vector<std::string> names;
  for (auto k : shapes) names.push_back(to_string(k));
  s.set("shapes", join(names, ","));
  s.set("class_names", join(class_names, ","));
  std::vector<std::string> vals;
  for (double v : class_intensity) vals.push_back(format_double(v));
  s.set("class_intensity", join(vals, ","));
  s.set("intensity_jitter", format_double(intensity_jitter));
  s.set("background_ramp", format_double(background_ramp));
  s.set("crossover_rate", format_double(crossover_rate));
  s.set("blur_sigma", format_double(blur_sigma));
  s.set("noise_sigma", format_double(noise_sigma));
}

namespace {

std::vector<std::uint8_t> rasterize(ShapeKind kind, const SynthSceneSpec& spec, Rng& rng) {
  const int h = spec.height, w = spec.width;
  const double side = std::min(h, w);
  const double extent = side * rng.uniform(spec.min_extent, spec.max_extent);
  const double cx = rng.uniform(0.1 * w, 0.9 * w);
  const double cy = rng.uniform(0.1 * h, 0.9 * h);
  std::vector<std::uint8_t> fp(static_cast<std::size_t>(h) * w, 0);
  double half_u = 0, half_v = 0, angle = 0;
  switch (kind) {
    case ShapeKind::disc:
      half_u = half_v = extent / 2;
      break;
    case ShapeKind::rectangle:
      half_u = extent / 2;
      half_v = extent * rng.uniform(0.6, 1.0) / 2;
      break;
    case ShapeKind::bar:
      half_u = extent * 0.7;
      half_v = std::max(1.5, extent * 0.12);
      angle = rng.uniform(0.0, std::numbers::pi);
      break;
  }
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      const double u = ca * dx + sa * dy, v = -sa * dx + ca * dy;
      bool inside = false;
      if (kind == ShapeKind::disc) {
        inside = u * u + v * v <= half_u * half_u;
      } else {
        inside = std::abs(u) <= half_u && std::abs(v) <= half_v;
      }
      fp[static_cast<std::size_t>(y) * w + x] = inside ? 1 : 0;
    }
  }
  // Centers stay inside the canvas, so the pixel under the center is covered
  // for every shape.
  fp[static_cast<std::size_t>(std::clamp(static_cast<int>(cy), 0, h - 1)) * w +
     std::clamp(static_cast<int>(cx), 0, w - 1)] = 1;
  return fp;
}

bool overlaps(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && b[i]) return true;
  }
  return false;
}

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

}  // namespace

Scene render_scene(const SynthSceneSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(splitmix64(seed));
  const int h = spec.height, w = spec.width;
  const std::size_t n = static_cast<std::size_t>(h) * w;
  const int k = spec.num_classes();

  Scene scene;
  const int count = spec.min_objects +
                    static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec.max_objects - spec.min_objects + 1)));
  for (int i = 0; i < count; ++i) {
    SceneObject obj;
    obj.label = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(k - 1)));
    obj.shape = spec.shape_for(obj.label);
    obj.intensity = std::clamp(spec.class_intensity[obj.label] +
                                   spec.intensity_jitter * rng.uniform(-1.0, 1.0),
                               0.0, 1.0);
    obj.group = i;
    obj.footprint = rasterize(obj.shape, spec, rng);
    scene.objects.push_back(std::move(obj));
  }

  // Thermal crossover: overlapping objects merge into one intensity group
  // with probability crossover_rate per overlapping pair.
  std::vector<int> parent(count);
  std::iota(parent.begin(), parent.end(), 0);
  for (int j = 0; j < count; ++j) {
    for (int i = 0; i < j; ++i) {
      if (!overlaps(scene.objects[i].footprint, scene.objects[j].footprint)) continue;
      if (!rng.bernoulli(spec.crossover_rate)) continue;
      const int a = find_root(parent, i), b = find_root(parent, j);
      parent[std::max(a, b)] = std::min(a, b);
    }
  }
  for (int i = 0; i < count; ++i) {
    auto& obj = scene.objects[i];
    obj.group = find_root(parent, i);
    obj.intensity = scene.objects[obj.group].intensity;
  }

  const double ramp_x = spec.background_ramp * rng.uniform(-1.0, 1.0);
  const double ramp_y = spec.background_ramp * rng.uniform(-1.0, 1.0);
  scene.mask = LabelMap(1, h, w, 0);
  scene.clean.resize(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      scene.clean[static_cast<std::size_t>(y) * w + x] =
          std::clamp(spec.class_intensity[0] + ramp_x * ((x + 0.5) / w - 0.5) +
                         ramp_y * ((y + 0.5) / h - 0.5),
                     0.0, 1.0);
    }
  }
  for (const auto& obj : scene.objects) {
    for (std::size_t p = 0; p < n; ++p) {
      if (!obj.footprint[p]) continue;
      scene.clean[p] = obj.intensity;
      scene.mask.values[p] = obj.label;
    }
  }

  std::vector<double> img = spec.blur_sigma > 0 ? gaussian_blur(scene.clean, h, w, spec.blur_sigma)
                                                : scene.clean;
  scene.image = GrayImage{h, w, std::vector<std::uint8_t>(n)};
  for (std::size_t p = 0; p < n; ++p) {
    double v = kContrastLow + (kContrastHigh - kContrastLow) * img[p];
    if (spec.noise_sigma > 0) v += spec.noise_sigma * rng.normal();
    v = std::clamp(v, 0.0, 1.0);
    scene.image.pixels[p] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return scene;
}

DatasetManifest thermogen(const SynthSceneSpec& spec, int count, std::uint64_t seed,
                          const fs::path& out_dir, const std::string& split) {
  if (count < 1) throw ValidationError("thermogen: count must be at least 1");
  spec.validate();
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  if (!ec) fs::create_directories(out_dir / "masks", ec);
  if (ec) throw IoError("thermogen: cannot create " + out_dir.string() + ": " + ec.message());

  DatasetManifest manifest;
  manifest.class_names = spec.class_names;
  manifest.split = split;
  for (int i = 0; i < count; ++i) {
    const Scene scene = render_scene(spec, seed + static_cast<std::uint64_t>(i));
    char stem[32];
    std::snprintf(stem, sizeof stem, "%05d", i);
    ManifestEntry e{out_dir / "images" / (std::string(stem) + ".pgm"),
                    out_dir / "masks" / (std::string(stem) + ".pgm"), std::nullopt};
    write_pgm(scene.image, e.image);
    write_mask(scene.mask, e.mask);
    manifest.entries.push_back(std::move(e));
  }
  save_manifest(manifest, out_dir / "manifest.txt");
  return manifest;
}

ClassStats class_statistics(const DatasetManifest& manifest) {
  const int k = manifest.num_classes();
  ClassStats stats{std::vector<std::uint64_t>(k, 0), std::vector<std::uint64_t>(k, 0), 0};
  for (const auto& e : manifest.entries) {
    const LabelMap mask = read_mask(e.mask, k);
    std::vector<std::uint64_t> local(k, 0);
    for (int v : mask.values) {
      if (v == kIgnoreIndex) {
        ++stats.ignored;
      } else {
        ++local[v];
      }
    }
    for (int c = 0; c < k; ++c) {
      stats.pixels[c] += local[c];
      if (local[c] > 0) ++stats.images[c];
    }
  }
  return stats;
}

std::string class_statistics_csv(const ClassStats& stats, const std::vector<std::string>& class_names) {
  const std::uint64_t total = std::accumulate(stats.pixels.begin(), stats.pixels.end(), std::uint64_t{0});
  std::ostringstream os;
  os << "class_name,images,pixels,fraction\n";
  char buf[32];
  for (std::size_t c = 0; c < stats.pixels.size(); ++c) {
    const double frac = total ? static_cast<double>(stats.pixels[c]) / static_cast<double>(total) : 0.0;
    std::snprintf(buf, sizeof buf, "%.6f", frac);
    os << (c < class_names.size() ? class_names[c] : "class" + std::to_string(c)) << ","
       << stats.images[c] << "," << stats.pixels[c] << "," << buf << "\n";
  }
  return os.str();
}

}  // namespace eccnn
