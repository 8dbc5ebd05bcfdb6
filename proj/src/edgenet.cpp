#include "eccnn/edgenet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eccnn/checkpoint.hpp"
#include "eccnn/errors.hpp"
#include "eccnn/imgproc.hpp"

ECCNN_BEGIN_NAMESPACE

namespace {

using Plane = std::vector<double>;

Plane block_average(const Plane& in, int h, int w, int factor, int oh, int ow) {
  Plane out(static_cast<std::size_t>(oh) * ow);
  for (int by = 0; by < oh; ++by) {
    const int y1 = std::min(h, (by + 1) * factor);
    for (int bx = 0; bx < ow; ++bx) {
      const int x1 = std::min(w, (bx + 1) * factor);
      double acc = 0;
      int count = 0;
      for (int y = by * factor; y < y1; ++y) {
        for (int x = bx * factor; x < x1; ++x) {
          acc += in[static_cast<std::size_t>(y) * w + x];
          ++count;
        }
      }
      out[static_cast<std::size_t>(by) * ow + bx] = acc / count;
    }
  }
  return out;
}

Plane sobel_magnitude(const Plane& in, int h, int w) {
  auto at = [&](int y, int x) {
    return in[static_cast<std::size_t>(std::clamp(y, 0, h - 1)) * w + std::clamp(x, 0, w - 1)];
  };
  Plane out(in.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (at(y - 1, x + 1) + 2 * at(y, x + 1) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2 * at(y, x - 1) + at(y + 1, x - 1));
      const double gy = (at(y + 1, x - 1) + 2 * at(y + 1, x) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2 * at(y - 1, x) + at(y - 1, x + 1));
      out[static_cast<std::size_t>(y) * w + x] = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

void normalize_in_place(Plane& mag) {
  constexpr double kFloor = 1e-12;
  Plane sorted = mag;
  const std::size_t rank =
      static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(sorted.size()))) - 1;
  std::nth_element(sorted.begin(), sorted.begin() + rank, sorted.end());
  double ref = sorted[rank];
  if (ref <= kFloor) ref = *std::max_element(mag.begin(), mag.end());
  if (ref <= kFloor) {
    std::fill(mag.begin(), mag.end(), 0.0);
    return;
  }
  for (auto& v : mag) v = std::clamp(v / ref, 0.0, 1.0);
}

}  // namespace

int edge_scale_dim(int size, int scale) {
  const int f = 1 << scale;
  return (size + f - 1) / f;
}

EdgeStack hierarchical_edges(const Tensor& image) {
  const Shape s = image.shape();
  if (s.c != 1) {
    throw ShapeError("hierarchical_edges: expected single-channel image, got " + s.str());
  }
  if (s.h < 8 || s.w < 8) {
    throw ValidationError("hierarchical_edges: image must be at least 8x8, got " + s.str());
  }
  EdgeStack stack;
  stack.source = EdgeSource::computed;
  std::vector<std::vector<Real>> outputs(kEdgeScales);
  for (int n = 0; n < s.n; ++n) {
    const auto src = image.data().subspan(static_cast<std::size_t>(n) * s.plane(), s.plane());
    Plane base(src.begin(), src.end());
    for (int i = 0; i < kEdgeScales; ++i) {
      const int factor = 1 << i;
      const int oh = edge_scale_dim(s.h, i);
      const int ow = edge_scale_dim(s.w, i);
      Plane p = gaussian_blur(base, s.h, s.w, 1.0 * factor);
      if (factor > 1) p = block_average(p, s.h, s.w, factor, oh, ow);
      Plane mag = sobel_magnitude(p, oh, ow);
      normalize_in_place(mag);
      for (double v : mag) outputs[i].push_back(static_cast<Real>(v));
    }
  }
  for (int i = 0; i < kEdgeScales; ++i) {
    stack.scales.push_back(Tensor::from_data(
        Shape{s.n, 1, edge_scale_dim(s.h, i), edge_scale_dim(s.w, i)}, std::move(outputs[i])));
  }
  return stack;
}

EdgeStack stack_edges(std::span<const EdgeStack> parts) {
  if (parts.empty()) throw ValidationError("stack_edges: no inputs");
  EdgeStack out;
  out.source = parts.front().source;
  const std::size_t nscales = parts.front().scales.size();
  for (std::size_t i = 0; i < nscales; ++i) {
    const Shape first = parts.front().scales[i].shape();
    std::vector<Real> data;
    int total = 0;
    for (const auto& p : parts) {
      if (p.scales.size() != nscales) throw ShapeError("stack_edges: scale count differs");
      const Shape ps = p.scales[i].shape();
      if (ps.c != first.c || ps.h != first.h || ps.w != first.w) {
        throw ShapeError("stack_edges: scale " + std::to_string(i) + " dims differ: " +
                         ps.str() + " vs " + first.str());
      }
      data.insert(data.end(), p.scales[i].data().begin(), p.scales[i].data().end());
      total += ps.n;
    }
    out.scales.push_back(Tensor::from_data(Shape{total, first.c, first.h, first.w}, std::move(data)));
  }
  return out;
}

EdgeStack slice_edges(const EdgeStack& stack, int index) {
  EdgeStack out;
  out.source = stack.source;
  for (const auto& t : stack.scales) {
    const Shape s = t.shape();
    if (index < 0 || index >= s.n) throw ValidationError("slice_edges: index out of range");
    const std::size_t per = static_cast<std::size_t>(s.c) * s.plane();
    auto part = t.data().subspan(index * per, per);
    out.scales.push_back(Tensor::from_data(Shape{1, s.c, s.h, s.w},
                                           std::vector<Real>(part.begin(), part.end())));
  }
  return out;
}

void save_edge_maps(const EdgeStack& edges, const std::filesystem::path& path) {
  Checkpoint ckpt;
  for (std::size_t i = 0; i < edges.scales.size(); ++i) {
    const Shape s = edges.scales[i].shape();
    if (s.n != 1 || s.c != 1) {
      throw ShapeError("save_edge_maps: expected a single-image stack, got " + s.str());
    }
    CheckpointEntry e;
    e.name = "edge.scale" + std::to_string(i);
    e.dims = {static_cast<std::uint32_t>(s.h), static_cast<std::uint32_t>(s.w)};
    for (Real v : edges.scales[i].data()) e.values.push_back(static_cast<float>(v));
    ckpt.add(std::move(e));
  }
  ckpt.save(path);
}

EdgeStack load_edge_maps(const std::filesystem::path& path, int image_h, int image_w) {
  if (!std::filesystem::exists(path)) {
    throw FileNotFoundError("edge map file not found: " + path.string());
  }
  const Checkpoint ckpt = Checkpoint::load(path);
  EdgeStack stack;
  stack.source = EdgeSource::loaded;
  for (int i = 0; i < kEdgeScales; ++i) {
    const std::string name = "edge.scale" + std::to_string(i);
    const CheckpointEntry* e = ckpt.find(name);
    if (e == nullptr) throw FormatError(path.string() + ": missing entry " + name);
    const int eh = edge_scale_dim(image_h, i);
    const int ew = edge_scale_dim(image_w, i);
    if (e->dims.size() != 2 || static_cast<int>(e->dims[0]) != eh ||
        static_cast<int>(e->dims[1]) != ew) {
      std::string got;
      for (auto d : e->dims) got += (got.empty() ? "" : "x") + std::to_string(d);
      throw ShapeError(path.string() + ": " + name + " has dims " + got + ", expected " +
                       std::to_string(eh) + "x" + std::to_string(ew));
    }
    std::vector<Real> values;
    values.reserve(e->values.size());
    for (float v : e->values) {
      if (!(v >= -1e-3f && v <= 1.0f + 1e-3f)) {
        throw ValidationError(path.string() + ": " + name + " value " + std::to_string(v) +
                              " outside [0, 1]");
      }
      values.push_back(std::clamp(static_cast<Real>(v), Real(0), Real(1)));
    }
    stack.scales.push_back(Tensor::from_data(Shape{1, 1, eh, ew}, std::move(values)));
  }
  return stack;
}

ECCNN_END_NAMESPACE
