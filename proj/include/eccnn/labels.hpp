#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace eccnn {

// Sentinel for padded and void pixels.
inline constexpr int kIgnoreIndex = 255;

// Integer label image(s), N x H x W.
struct LabelMap {
  int n = 1;
  int h = 0;
  int w = 0;
  std::vector<std::int32_t> values;

  LabelMap() = default;
  LabelMap(int n_, int h_, int w_, std::int32_t fill = 0)
      : n(n_), h(h_), w(w_), values(static_cast<std::size_t>(n_) * h_ * w_, fill) {}

  std::size_t size() const { return values.size(); }
  std::int32_t& at(int i, int y, int x) {
    return values[(static_cast<std::size_t>(i) * h + y) * w + x];
  }
  std::int32_t at(int i, int y, int x) const {
    return values[(static_cast<std::size_t>(i) * h + y) * w + x];
  }
  bool operator==(const LabelMap&) const = default;
};

}  // namespace eccnn
