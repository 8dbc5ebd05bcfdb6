#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eccnn/dataio.hpp"
#include "eccnn/edgenet.hpp"
#include "eccnn/raster.hpp"
#include "eccnn/tensor.hpp"

ECCNN_BEGIN_NAMESPACE

// 8-bit gray to a 1 x 1 x H x W tensor in [0, 1] (v / 255).
Tensor image_to_tensor(const GrayImage& image);
Tensor read_image(const std::filesystem::path& path);
// Inverse of image_to_tensor for one image of a batch, rounded and clamped.
GrayImage tensor_to_image(const Tensor& image, int index = 0);

struct Sample {
  Tensor image;  // 1 x 1 x H x W
  LabelMap mask;
  // Present when the manifest supplies precomputed edge maps.
  std::optional<EdgeStack> edges;
};

struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::string> class_names;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  std::size_t size() const { return samples.size(); }
};

// With `use_manifest_edges` every entry must provide an edge-map file.
Dataset load_dataset(const DatasetManifest& manifest, bool use_manifest_edges = false);
Dataset load_dataset(const std::filesystem::path& manifest_path, bool use_manifest_edges = false);

// Edge maps for a sample: the loaded ones if present, computed otherwise.
EdgeStack sample_edges(const Sample& sample);

ECCNN_END_NAMESPACE
