#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eccnn/labels.hpp"

namespace eccnn {

// counts[g][p]: pixels with ground truth g predicted as p.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  int num_classes() const { return k_; }
  std::uint64_t at(int truth, int predicted) const {
    return counts_[static_cast<std::size_t>(truth) * k_ + predicted];
  }
  std::uint64_t total() const;
  std::uint64_t row_sum(int k) const;
  std::uint64_t col_sum(int k) const;

  // Pixels whose ground truth equals ignore_index are skipped. Any other
  // label (truth or prediction) outside [0, K) is rejected.
  void accumulate(const LabelMap& predicted, const LabelMap& truth,
                  int ignore_index = kIgnoreIndex);
  void merge(const ConfusionMatrix& other);

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  int k_;
  std::vector<std::uint64_t> counts_;
};

double pixel_accuracy(const ConfusionMatrix& cm);
// IoU_k = tp / (row_k + col_k - tp); nullopt for classes with empty union.
std::vector<std::optional<double>> per_class_iou(const ConfusionMatrix& cm);
// Mean over classes with non-empty union; background counts as class 0.
double mean_iou(const ConfusionMatrix& cm);

struct EvalSummary {
  double pixel_accuracy = 0;
  double mean_iou = 0;
  std::vector<std::optional<double>> class_iou;
};
EvalSummary summarize(const ConfusionMatrix& cm);

// CSV (class_name, iou) with a trailing summary line.
std::string evaluation_report_csv(const EvalSummary& summary,
                                  const std::vector<std::string>& class_names);

}  // namespace eccnn
