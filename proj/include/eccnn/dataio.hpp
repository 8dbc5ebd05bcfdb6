#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eccnn/config.hpp"
#include "eccnn/labels.hpp"
#include "eccnn/raster.hpp"

namespace eccnn {

struct ManifestEntry {
  std::filesystem::path image;
  std::filesystem::path mask;
  std::optional<std::filesystem::path> edges;
};

// Line-oriented dataset index:
//
//   #!split=train
//   #!classes=background,disc,...
//   images/00000.pgm<TAB>masks/00000.pgm[<TAB>edges/00000.ecm]
//
// Relative paths resolve against the manifest's directory. Other lines
// starting with '#' are comments.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> class_names;
  std::string split = "train";

  int num_classes() const { return static_cast<int>(class_names.size()); }
};

// Checks that every referenced file exists; FileNotFoundError names the first
// missing one.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

enum class ShapeKind { disc, rectangle, bar };
std::string to_string(ShapeKind kind);
ShapeKind parse_shape(const std::string& name);

struct SynthSceneSpec {
  int height = 64;
  int width = 64;
  int min_objects = 2;
  int max_objects = 5;
  // Object extent as a fraction of the shorter canvas side.
  double min_extent = 0.2;
  double max_extent = 0.45;
  std::vector<ShapeKind> shapes{ShapeKind::disc, ShapeKind::rectangle, ShapeKind::bar};
  // Index 0 is the background.
  std::vector<std::string> class_names{"background", "disc_hot", "block_warm", "bar_mild",
                                       "disc_cool", "block_cold"};
  std::vector<double> class_intensity{0.15, 0.95, 0.8, 0.65, 0.5, 0.35};
  double intensity_jitter = 0.03;
  // Amplitude of a random linear ramp added to the background.
  double background_ramp = 0.05;
  double crossover_rate = 0.6;
  double blur_sigma = 1.0;
  double noise_sigma = 0.02;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  // Object class k >= 1 is drawn with shapes[(k - 1) % shapes.size()].
  ShapeKind shape_for(int label) const;
  void validate() const;

  static SynthSceneSpec from_section(const ConfigSection& section, SynthSceneSpec defaults);
  static SynthSceneSpec from_section(const ConfigSection& section);
  void write_section(ConfigSection& section) const;
};

// Contrast compression range applied before noise.
inline constexpr double kContrastLow = 0.3;
inline constexpr double kContrastHigh = 0.7;

struct SceneObject {
  int label = 0;
  ShapeKind shape = ShapeKind::disc;
  double intensity = 0;
  // Index of the object whose intensity this one inherited (itself if none).
  int group = 0;
  std::vector<std::uint8_t> footprint;  // h x w coverage, before occlusion
};

struct Scene {
  GrayImage image;             // degraded, 8-bit
  LabelMap mask;               // from the geometry
  std::vector<double> clean;   // intensities before degradation
  std::vector<SceneObject> objects;  // painting order
};

Scene render_scene(const SynthSceneSpec& spec, std::uint64_t seed);

// Renders `count` scenes with per-scene seeds seed + index into out_dir
// (images/, masks/, manifest.txt) and returns the manifest.
DatasetManifest thermogen(const SynthSceneSpec& spec, int count, std::uint64_t seed,
                          const std::filesystem::path& out_dir, const std::string& split = "train");

struct ClassStats {
  std::vector<std::uint64_t> pixels;
  std::vector<std::uint64_t> images;
  std::uint64_t ignored = 0;
};
ClassStats class_statistics(const DatasetManifest& manifest);
// CSV (class_name, images, pixels, fraction).
std::string class_statistics_csv(const ClassStats& stats, const std::vector<std::string>& class_names);

}  // namespace eccnn
