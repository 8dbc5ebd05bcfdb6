#include "eccnn/metrics.hpp"

#include <cstdio>
#include <numeric>
#include <sstream>

#include "eccnn/errors.hpp"

namespace eccnn {

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : k_(num_classes), counts_(static_cast<std::size_t>(num_classes) * num_classes, 0) {
  if (num_classes < 1) throw ValidationError("confusion matrix needs at least one class");
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::row_sum(int k) const {
  std::uint64_t s = 0;
  for (int p = 0; p < k_; ++p) s += at(k, p);
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(int k) const {
  std::uint64_t s = 0;
  for (int g = 0; g < k_; ++g) s += at(g, k);
  return s;
}

void ConfusionMatrix::accumulate(const LabelMap& predicted, const LabelMap& truth,
                                 int ignore_index) {
  if (predicted.n != truth.n || predicted.h != truth.h || predicted.w != truth.w) {
    throw ShapeError("confusion matrix: prediction and ground truth shapes differ");
  }
  // Validate first so a rejected call leaves the matrix untouched.
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int g = truth.values[i];
    if (g == ignore_index) continue;
    const int p = predicted.values[i];
    if (g < 0 || g >= k_ || p < 0 || p >= k_) {
      throw ValidationError("confusion matrix: label out of range (truth " + std::to_string(g) +
                            ", predicted " + std::to_string(p) + ", classes " +
                            std::to_string(k_) + ")");
    }
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int g = truth.values[i];
    if (g == ignore_index) continue;
    ++counts_[static_cast<std::size_t>(g) * k_ + predicted.values[i]];
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.k_ != k_) throw ValidationError("confusion matrix: class counts differ");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

double pixel_accuracy(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw ValidationError("pixel accuracy of an empty confusion matrix");
  std::uint64_t diag = 0;
  for (int k = 0; k < cm.num_classes(); ++k) diag += cm.at(k, k);
  return static_cast<double>(diag) / static_cast<double>(total);
}

std::vector<std::optional<double>> per_class_iou(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ValidationError("IoU of an empty confusion matrix");
  std::vector<std::optional<double>> out(cm.num_classes());
  for (int k = 0; k < cm.num_classes(); ++k) {
    const std::uint64_t tp = cm.at(k, k);
    const std::uint64_t uni = cm.row_sum(k) + cm.col_sum(k) - tp;
    if (uni > 0) out[k] = static_cast<double>(tp) / static_cast<double>(uni);
  }
  return out;
}

double mean_iou(const ConfusionMatrix& cm) {
  double acc = 0;
  int n = 0;
  for (const auto& v : per_class_iou(cm)) {
    if (!v) continue;
    acc += *v;
    ++n;
  }
  return acc / n;
}

EvalSummary summarize(const ConfusionMatrix& cm) {
  return {pixel_accuracy(cm), mean_iou(cm), per_class_iou(cm)};
}

std::string evaluation_report_csv(const EvalSummary& summary,
                                  const std::vector<std::string>& class_names) {
  std::ostringstream os;
  os << "class_name,iou\n";
  char buf[64];
  for (std::size_t k = 0; k < summary.class_iou.size(); ++k) {
    const std::string name = k < class_names.size() ? class_names[k] : "class" + std::to_string(k);
    if (summary.class_iou[k]) {
      std::snprintf(buf, sizeof buf, "%.6f", *summary.class_iou[k]);
      os << name << "," << buf << "\n";
    } else {
      os << name << ",absent\n";
    }
  }
  std::snprintf(buf, sizeof buf, "pixacc=%.6f miou=%.6f", summary.pixel_accuracy,
                summary.mean_iou);
  os << "# summary " << buf << "\n";
  return os.str();
}

}  // namespace eccnn
