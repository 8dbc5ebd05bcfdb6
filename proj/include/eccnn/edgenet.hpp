#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "eccnn/tensor.hpp"

ECCNN_BEGIN_NAMESPACE

inline constexpr int kEdgeScales = 3;

enum class EdgeSource { computed, loaded };

// Edge probability maps at 1/1, 1/2 and 1/4 of the input resolution; scale i
// is N x 1 x ceil(H / 2^i) x ceil(W / 2^i) with values in [0, 1].
struct EdgeStack {
  std::vector<Tensor> scales;
  EdgeSource source = EdgeSource::computed;

  int batch() const { return scales.empty() ? 0 : scales.front().shape().n; }
  bool empty() const { return scales.empty(); }
};

// Per scale i: Gaussian blur with sigma 2^i, block-average to the scale's
// resolution, Sobel gradient magnitude, divide by the 99th percentile and clamp
// to [0, 1]. Images are N x 1 x H x W with H, W >= 8; every image is
// normalized independently.
EdgeStack hierarchical_edges(const Tensor& image);

// Concatenates per-image stacks along the batch dimension.
EdgeStack stack_edges(std::span<const EdgeStack> parts);

// Picks image `index` out of a batched stack.
EdgeStack slice_edges(const EdgeStack& stack, int index);

// Entries edge.scale0 .. edge.scale2 in the checkpoint container.
void save_edge_maps(const EdgeStack& edges, const std::filesystem::path& path);

// Loads a single-image stack and checks it against an H x W input. Values more
// than 1e-3 outside [0, 1] are rejected, smaller excursions are clamped.
EdgeStack load_edge_maps(const std::filesystem::path& path, int image_h, int image_w);

// Expected dims of scale i for an H x W input.
int edge_scale_dim(int size, int scale);

ECCNN_END_NAMESPACE
