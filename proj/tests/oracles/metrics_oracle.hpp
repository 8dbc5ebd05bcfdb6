#pragma once

// Set-based IoU: for each class, intersect and unite the pixel index sets.

#include <algorithm>
#include <iterator>
#include <set>
#include <vector>

namespace oracle {

struct SetMetrics {
  double pixel_accuracy = 0;
  double mean_iou = 0;
};

inline SetMetrics set_metrics(const std::vector<int>& pred, const std::vector<int>& truth,
                              int num_classes, int ignore) {
  std::size_t correct = 0, counted = 0;
  std::vector<std::set<std::size_t>> p(num_classes), g(num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == ignore) continue;
    ++counted;
    if (pred[i] == truth[i]) ++correct;
    g[truth[i]].insert(i);
    p[pred[i]].insert(i);
  }
  double sum = 0;
  int present = 0;
  for (int k = 0; k < num_classes; ++k) {
    std::vector<std::size_t> inter, uni;
    std::set_intersection(p[k].begin(), p[k].end(), g[k].begin(), g[k].end(),
                          std::back_inserter(inter));
    std::set_union(p[k].begin(), p[k].end(), g[k].begin(), g[k].end(), std::back_inserter(uni));
    if (uni.empty()) continue;
    sum += static_cast<double>(inter.size()) / static_cast<double>(uni.size());
    ++present;
  }
  SetMetrics m;
  m.pixel_accuracy = static_cast<double>(correct) / static_cast<double>(counted);
  m.mean_iou = sum / present;
  return m;
}

}  // namespace oracle
