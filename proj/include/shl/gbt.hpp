#pragma once

// Multiclass gradient-boosted decision trees.
//
// Softmax objective, zero initial logits, one regression tree per class per
// iteration. Trees are grown depth-first on quantile-binned features using
// weighted gradient/hessian histograms; leaves take a damped Newton step
// -lr * G / (H + l2). Training is single-threaded and fully deterministic.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "shl/types.hpp"

namespace shl {

// Dense row-major matrix tagged with the hash of its column schema.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::uint64_t schema_hash = 0;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c, std::uint64_t hash = 0)
      : rows(r), cols(c), values(r * c, 0.0), schema_hash(hash) {}

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

// Subset of rows, keeping the schema tag.
FeatureMatrix select_rows(const FeatureMatrix& x, std::span<const std::size_t> rows);

struct GbtParams {
  int n_iterations = 1000;
  double learning_rate = 0.1;
  int max_depth = 6;
  int min_samples_leaf = 20;
  int n_bins = 255;
  double l2_reg = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  std::int32_t threshold_bin = -1;
  double threshold = 0.0;  // go left when x <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> row) const;
};

class GbtModel {
 public:
  GbtModel() = default;
  GbtModel(std::vector<ClassId> classes, std::size_t n_features, std::uint64_t schema_hash,
           GbtParams params);

  const std::vector<ClassId>& classes() const { return classes_; }
  std::size_t n_features() const { return n_features_; }
  std::uint64_t schema_hash() const { return schema_hash_; }
  const GbtParams& params() const { return params_; }
  std::size_t n_iterations() const { return trees_.size(); }

  // trees()[iteration][class_index]
  const std::vector<std::vector<Tree>>& trees() const { return trees_; }
  void add_iteration(std::vector<Tree> per_class);

  // Raw summed tree outputs, rows x classes.
  std::vector<double> decision_function(const FeatureMatrix& x) const;
  // Softmax probabilities, rows x classes.
  std::vector<double> predict_proba(const FeatureMatrix& x) const;
  // Argmax class per row; ties go to the lowest class id.
  std::vector<ClassId> predict(const FeatureMatrix& x) const;

  void save(std::ostream& os) const;
  static GbtModel load(std::istream& is);

 private:
  void check_schema(const FeatureMatrix& x) const;

  std::vector<ClassId> classes_;
  std::size_t n_features_ = 0;
  std::uint64_t schema_hash_ = 0;
  GbtParams params_;
  std::vector<std::vector<Tree>> trees_;
};

// w_c = N / (K_present * N_c).
std::map<ClassId, double> balanced_weights(std::span<const ClassId> labels);
std::vector<double> sample_weights(std::span<const ClassId> labels,
                                   const std::map<ClassId, double>& class_weights);

// Called after every boosting iteration with the iteration index and the
// weighted mean training log-loss.
using FitObserver = std::function<void(int iteration, double weighted_log_loss)>;

GbtModel fit(const FeatureMatrix& x, std::span<const ClassId> y, std::span<const double> weights,
             const GbtParams& params, const FitObserver& observer = {});

// --- softmax helpers (also used by tests) ---------------------------------

std::vector<double> softmax(std::span<const double> logits);
// -log softmax(logits)[label_index]
double softmax_log_loss(std::span<const double> logits, std::size_t label_index);
// d loss / d logits = p - onehot(label_index)
std::vector<double> softmax_gradient(std::span<const double> logits, std::size_t label_index);

}  // namespace shl
