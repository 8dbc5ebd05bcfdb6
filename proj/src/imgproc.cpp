#include "eccnn/imgproc.hpp"

#include <algorithm>
#include <cmath>

namespace eccnn {

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double total = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    total += k[i + radius];
  }
  for (auto& v : k) v /= total;
  return k;
}

std::vector<double> gaussian_blur(const std::vector<double>& in, int h, int w, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  std::vector<double> tmp(in.size()), out(in.size(), 0.0);
  std::vector<double> row(static_cast<std::size_t>(w + 2 * r));
  for (int y = 0; y < h; ++y) {
    const double* src = in.data() + static_cast<std::size_t>(y) * w;
    for (int x = -r; x < w + r; ++x) row[x + r] = src[std::clamp(x, 0, w - 1)];
    double* dst = tmp.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (std::size_t i = 0; i < k.size(); ++i) acc += k[i] * row[x + i];
      dst[x] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    double* dst = out.data() + static_cast<std::size_t>(y) * w;
    for (int i = -r; i <= r; ++i) {
      const double* src = tmp.data() + static_cast<std::size_t>(std::clamp(y + i, 0, h - 1)) * w;
      const double ki = k[i + r];
      for (int x = 0; x < w; ++x) dst[x] += ki * src[x];
    }
  }
  return out;
}

}  // namespace eccnn
