#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shl/types.hpp"

namespace shl {

struct ConfusionMatrix {
  std::vector<ClassId> classes;
  std::vector<std::int64_t> counts;  // row = true class, col = predicted, row-major

  std::int64_t at(std::size_t true_idx, std::size_t pred_idx) const {
    return counts[true_idx * classes.size() + pred_idx];
  }
  std::int64_t total() const;
};

// Throws ValidationError on length mismatch or a label outside `classes`.
ConfusionMatrix confusion_matrix(std::span<const ClassId> y_true, std::span<const ClassId> y_pred,
                                 std::span<const ClassId> classes);

// F1 per listed class; a class absent from both y_true and y_pred scores 0.
std::vector<double> per_class_f1(const ConfusionMatrix& cm);

// Unweighted mean of per_class_f1 over every listed class.
double macro_f1(std::span<const ClassId> y_true, std::span<const ClassId> y_pred,
                std::span<const ClassId> classes);

double accuracy(std::span<const ClassId> y_true, std::span<const ClassId> y_pred);

}  // namespace shl
