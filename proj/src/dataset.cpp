#include "eccnn/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "eccnn/errors.hpp"

ECCNN_BEGIN_NAMESPACE

Tensor image_to_tensor(const GrayImage& image) {
  std::vector<Real> data(image.pixels.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<Real>(image.pixels[i]) / Real(255);
  return Tensor::from_data({1, 1, image.h, image.w}, std::move(data));
}

Tensor read_image(const std::filesystem::path& path) { return image_to_tensor(read_pgm(path)); }

GrayImage tensor_to_image(const Tensor& image, int index) {
  const Shape& s = image.shape();
  if (s.c != 1 || index < 0 || index >= s.n) throw ShapeError("tensor_to_image: expected N x 1 x H x W");
  GrayImage out{s.h, s.w, std::vector<std::uint8_t>(s.plane())};
  const auto data = image.data().subspan(static_cast<std::size_t>(index) * s.plane(), s.plane());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double v = std::clamp(static_cast<double>(data[i]), 0.0, 1.0);
    out.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return out;
}

Dataset load_dataset(const DatasetManifest& manifest, bool use_manifest_edges) {
  Dataset ds;
  ds.class_names = manifest.class_names;
  const int k = manifest.num_classes();
  for (const auto& e : manifest.entries) {
    Sample s;
    s.image = read_image(e.image);
    s.mask = read_mask(e.mask, k);
    const Shape& shape = s.image.shape();
    if (s.mask.h != shape.h || s.mask.w != shape.w) {
      throw ShapeError("mask " + e.mask.string() + " does not match image " + e.image.string());
    }
    if (use_manifest_edges) {
      if (!e.edges) throw ValidationError("manifest entry " + e.image.string() + " has no edge-map file");
      s.edges = load_edge_maps(*e.edges, shape.h, shape.w);
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& manifest_path, bool use_manifest_edges) {
  return load_dataset(load_manifest(manifest_path), use_manifest_edges);
}

EdgeStack sample_edges(const Sample& sample) {
  return sample.edges ? *sample.edges : hierarchical_edges(sample.image);
}

ECCNN_END_NAMESPACE
