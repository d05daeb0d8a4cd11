#include "shl/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace shl {

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

ConfusionMatrix confusion_matrix(std::span<const ClassId> y_true, std::span<const ClassId> y_pred,
                                 std::span<const ClassId> classes) {
  if (y_true.size() != y_pred.size()) throw ValidationError("confusion_matrix: length mismatch");
  ConfusionMatrix cm;
  cm.classes.assign(classes.begin(), classes.end());
  const std::size_t k = classes.size();
  cm.counts.assign(k * k, 0);
  auto index = [&](ClassId c) {
    auto it = std::find(classes.begin(), classes.end(), c);
    if (it == classes.end()) throw ValidationError("unknown class id " + std::to_string(c));
    return static_cast<std::size_t>(it - classes.begin());
  };
  for (std::size_t i = 0; i < y_true.size(); ++i) ++cm.counts[index(y_true[i]) * k + index(y_pred[i])];
  return cm;
}

std::vector<double> per_class_f1(const ConfusionMatrix& cm) {
  const std::size_t k = cm.classes.size();
  std::vector<double> f1(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    std::int64_t tp = cm.at(c, c), fp = 0, fn = 0;
    for (std::size_t o = 0; o < k; ++o) {
      if (o == c) continue;
      fp += cm.at(o, c);
      fn += cm.at(c, o);
    }
    const std::int64_t denom = 2 * tp + fp + fn;
    f1[c] = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
  return f1;
}

double macro_f1(std::span<const ClassId> y_true, std::span<const ClassId> y_pred,
                std::span<const ClassId> classes) {
  if (y_true.size() != y_pred.size()) throw ValidationError("macro_f1: length mismatch");
  if (classes.empty()) return 0.0;
  const auto f1 = per_class_f1(confusion_matrix(y_true, y_pred, classes));
  return std::accumulate(f1.begin(), f1.end(), 0.0) / static_cast<double>(f1.size());
}

double accuracy(std::span<const ClassId> y_true, std::span<const ClassId> y_pred) {
  if (y_true.size() != y_pred.size()) throw ValidationError("accuracy: length mismatch");
  if (y_true.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) hit += y_true[i] == y_pred[i];
  return static_cast<double>(hit) / static_cast<double>(y_true.size());
}

}  // namespace shl
