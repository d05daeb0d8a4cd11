#include "shl/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "shl/binary_io.hpp"

namespace shl {

namespace {

constexpr std::uint32_t kModelVersion = 1;
constexpr double kMinHessian = 1e-16;
constexpr double kMinGain = 1e-12;

// Quantile binning. With at most n_bins distinct values every value gets its
// own bin (thresholds at midpoints); otherwise cut points sit at evenly spaced
// ranks. bin(x) = number of thresholds strictly below x, so bin(x) <= b
// exactly when x <= thresholds[b].
struct BinnedData {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::vector<double>> thresholds;
  std::vector<std::uint8_t> bins;  // column-major

  std::uint8_t bin(std::size_t feature, std::size_t row) const { return bins[feature * rows + row]; }
};

std::vector<double> feature_thresholds(std::vector<double> column, int n_bins) {
  std::sort(column.begin(), column.end());
  std::vector<double> uniq;
  uniq.reserve(column.size());
  for (double v : column)
    if (uniq.empty() || v != uniq.back()) uniq.push_back(v);

  std::vector<double> t;
  const auto max_bins = static_cast<std::size_t>(n_bins);
  if (uniq.size() <= max_bins) {
    for (std::size_t i = 0; i + 1 < uniq.size(); ++i) t.push_back(uniq[i] + (uniq[i + 1] - uniq[i]) / 2.0);
  } else {
    const std::size_t n = column.size();
    for (std::size_t j = 1; j < max_bins; ++j) {
      const std::size_t q = j * n / max_bins;
      if (q == 0 || q >= n || column[q - 1] == column[q]) continue;
      const double cut = column[q - 1] + (column[q] - column[q - 1]) / 2.0;
      if (t.empty() || cut > t.back()) t.push_back(cut);
    }
  }
  return t;
}

BinnedData bin_features(const FeatureMatrix& x, int n_bins) {
  BinnedData d;
  d.rows = x.rows;
  d.cols = x.cols;
  d.thresholds.resize(x.cols);
  d.bins.resize(x.rows * x.cols);
  std::vector<double> column(x.rows);
  for (std::size_t f = 0; f < x.cols; ++f) {
    for (std::size_t i = 0; i < x.rows; ++i) column[i] = x.at(i, f);
    d.thresholds[f] = feature_thresholds(column, n_bins);
    const auto& t = d.thresholds[f];
    for (std::size_t i = 0; i < x.rows; ++i)
      d.bins[f * x.rows + i] =
          static_cast<std::uint8_t>(std::lower_bound(t.begin(), t.end(), column[i]) - t.begin());
  }
  return d;
}

class TreeBuilder {
 public:
  TreeBuilder(const BinnedData& data, const GbtParams& params, std::span<const double> grad,
              std::span<const double> hess, std::vector<double>& row_output)
      : data_(data), params_(params), grad_(grad), hess_(hess), row_output_(row_output),
        hist_g_(256), hist_h_(256), hist_n_(256) {}

  Tree build() {
    std::vector<std::uint32_t> rows(data_.rows);
    std::iota(rows.begin(), rows.end(), 0u);
    tree_ = Tree{};
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    double gain = kMinGain;
    std::int32_t feature = -1;
    std::int32_t bin = -1;
  };

  std::int32_t grow(std::span<std::uint32_t> rows, int depth) {
    double g_sum = 0.0, h_sum = 0.0;
    for (auto r : rows) {
      g_sum += grad_[r];
      h_sum += hess_[r];
    }
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    Split split;
    const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
    if (depth < params_.max_depth && rows.size() >= 2 * min_leaf) split = find_split(rows, g_sum, h_sum);

    if (split.feature < 0) {
      const double value = -params_.learning_rate * g_sum / (h_sum + params_.l2_reg);
      tree_.nodes[static_cast<std::size_t>(id)].value = value;
      for (auto r : rows) row_output_[r] = value;
      return id;
    }

    const auto f = static_cast<std::size_t>(split.feature);
    auto mid = std::stable_partition(rows.begin(), rows.end(), [&](std::uint32_t r) {
      return data_.bin(f, r) <= static_cast<std::uint8_t>(split.bin);
    });
    const auto n_left = static_cast<std::size_t>(mid - rows.begin());
    const std::int32_t left = grow(rows.subspan(0, n_left), depth + 1);
    const std::int32_t right = grow(rows.subspan(n_left), depth + 1);

    TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold_bin = split.bin;
    node.threshold = data_.thresholds[f][static_cast<std::size_t>(split.bin)];
    node.left = left;
    node.right = right;
    return id;
  }

  Split find_split(std::span<const std::uint32_t> rows, double g_sum, double h_sum) {
    const double lambda = params_.l2_reg;
    const double parent = g_sum * g_sum / (h_sum + lambda);
    const auto n = rows.size();
    const auto min_leaf = static_cast<std::size_t>(params_.min_samples_leaf);
    Split best;
    for (std::size_t f = 0; f < data_.cols; ++f) {
      const std::size_t nb = data_.thresholds[f].size() + 1;
      if (nb < 2) continue;
      std::fill_n(hist_g_.begin(), nb, 0.0);
      std::fill_n(hist_h_.begin(), nb, 0.0);
      std::fill_n(hist_n_.begin(), nb, 0u);
      const std::uint8_t* col = data_.bins.data() + f * data_.rows;
      for (auto r : rows) {
        const auto b = col[r];
        hist_g_[b] += grad_[r];
        hist_h_[b] += hess_[r];
        ++hist_n_[b];
      }
      double gl = 0.0, hl = 0.0;
      std::size_t nl = 0;
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        gl += hist_g_[b];
        hl += hist_h_[b];
        nl += hist_n_[b];
        if (nl < min_leaf) continue;
        if (n - nl < min_leaf) break;
        const double gr = g_sum - gl, hr = h_sum - hl;
        const double gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent;
        if (gain > best.gain) {
          best.gain = gain;
          best.feature = static_cast<std::int32_t>(f);
          best.bin = static_cast<std::int32_t>(b);
        }
      }
    }
    return best;
  }

  const BinnedData& data_;
  const GbtParams& params_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  std::vector<double>& row_output_;
  std::vector<double> hist_g_, hist_h_;
  std::vector<std::uint32_t> hist_n_;
  Tree tree_;
};

void put_params(std::ostream& os, const GbtParams& p) {
  bin::put<std::int32_t>(os, p.n_iterations);
  bin::put<double>(os, p.learning_rate);
  bin::put<std::int32_t>(os, p.max_depth);
  bin::put<std::int32_t>(os, p.min_samples_leaf);
  bin::put<std::int32_t>(os, p.n_bins);
  bin::put<double>(os, p.l2_reg);
  bin::put<std::uint64_t>(os, p.seed);
}

GbtParams get_params(std::istream& is) {
  GbtParams p;
  p.n_iterations = bin::get<std::int32_t>(is);
  p.learning_rate = bin::get<double>(is);
  p.max_depth = bin::get<std::int32_t>(is);
  p.min_samples_leaf = bin::get<std::int32_t>(is);
  p.n_bins = bin::get<std::int32_t>(is);
  p.l2_reg = bin::get<double>(is);
  p.seed = bin::get<std::uint64_t>(is);
  return p;
}

}  // namespace

FeatureMatrix select_rows(const FeatureMatrix& x, std::span<const std::size_t> rows) {
  FeatureMatrix out(rows.size(), x.cols, x.schema_hash);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = x.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void GbtParams::validate() const {
  if (n_iterations < 0) throw ValidationError("iterations must be non-negative");
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  if (max_depth < 0) throw ValidationError("max depth must be non-negative");
  if (min_samples_leaf < 1) throw ValidationError("min samples per leaf must be positive");
  if (n_bins < 2 || n_bins > 255) throw ValidationError("bin count must be in [2, 255]");
  if (l2_reg < 0.0) throw ValidationError("l2 regularization must be non-negative");
}

double Tree::predict(std::span<const double> row) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

GbtModel::GbtModel(std::vector<ClassId> classes, std::size_t n_features, std::uint64_t schema_hash,
                   GbtParams params)
    : classes_(std::move(classes)), n_features_(n_features), schema_hash_(schema_hash), params_(params) {}

void GbtModel::add_iteration(std::vector<Tree> per_class) {
  if (per_class.size() != classes_.size()) throw std::logic_error("tree count must equal class count");
  trees_.push_back(std::move(per_class));
}

void GbtModel::check_schema(const FeatureMatrix& x) const {
  if (x.cols != n_features_ || x.schema_hash != schema_hash_)
    throw SchemaError("feature matrix does not match the model schema (expected " +
                      std::to_string(n_features_) + " columns, hash " + std::to_string(schema_hash_) +
                      "; got " + std::to_string(x.cols) + " columns, hash " +
                      std::to_string(x.schema_hash) + ")");
}

std::vector<double> GbtModel::decision_function(const FeatureMatrix& x) const {
  check_schema(x);
  const std::size_t k = classes_.size();
  std::vector<double> out(x.rows * k, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    auto row = x.row(i);
    double* dst = out.data() + i * k;
    for (const auto& iteration : trees_)
      for (std::size_t c = 0; c < k; ++c) dst[c] += iteration[c].predict(row);
  }
  return out;
}

std::vector<double> GbtModel::predict_proba(const FeatureMatrix& x) const {
  auto logits = decision_function(x);
  const std::size_t k = classes_.size();
  for (std::size_t i = 0; i < x.rows; ++i) {
    std::span<double> row(logits.data() + i * k, k);
    auto p = softmax(row);
    std::copy(p.begin(), p.end(), row.begin());
  }
  return logits;
}

std::vector<ClassId> GbtModel::predict(const FeatureMatrix& x) const {
  const auto logits = decision_function(x);
  const std::size_t k = classes_.size();
  std::vector<ClassId> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* row = logits.data() + i * k;
    out[i] = classes_[static_cast<std::size_t>(std::max_element(row, row + k) - row)];
  }
  return out;
}

void GbtModel::save(std::ostream& os) const {
  bin::put_magic(os, "SHLM");
  bin::put<std::uint32_t>(os, kModelVersion);
  put_params(os, params_);
  bin::put<std::uint64_t>(os, schema_hash_);
  bin::put<std::uint64_t>(os, n_features_);
  bin::put<std::uint32_t>(os, static_cast<std::uint32_t>(classes_.size()));
  for (ClassId c : classes_) bin::put<std::int32_t>(os, c);
  bin::put<std::uint32_t>(os, static_cast<std::uint32_t>(trees_.size()));
  for (const auto& iteration : trees_)
    for (const auto& tree : iteration) {
      bin::put<std::uint32_t>(os, static_cast<std::uint32_t>(tree.nodes.size()));
      for (const auto& n : tree.nodes) {
        bin::put<std::int32_t>(os, n.feature);
        bin::put<std::int32_t>(os, n.threshold_bin);
        bin::put<double>(os, n.threshold);
        bin::put<std::int32_t>(os, n.left);
        bin::put<std::int32_t>(os, n.right);
        bin::put<double>(os, n.value);
      }
    }
}

GbtModel GbtModel::load(std::istream& is) {
  bin::expect_magic(is, "SHLM", "model");
  if (auto v = bin::get<std::uint32_t>(is); v != kModelVersion)
    throw ParseError("unsupported model version " + std::to_string(v));
  GbtParams params = get_params(is);
  const auto hash = bin::get<std::uint64_t>(is);
  const auto n_features = bin::get<std::uint64_t>(is);
  const auto n_classes = bin::get<std::uint32_t>(is);
  if (n_classes > 1024) throw ParseError("model class count out of range");
  std::vector<ClassId> classes(n_classes);
  for (auto& c : classes) c = bin::get<std::int32_t>(is);
  GbtModel m(std::move(classes), n_features, hash, params);

  const auto n_iter = bin::get<std::uint32_t>(is);
  for (std::uint32_t it = 0; it < n_iter; ++it) {
    std::vector<Tree> per_class(n_classes);
    for (auto& tree : per_class) {
      const auto n_nodes = bin::get<std::uint32_t>(is);
      if (n_nodes == 0 || n_nodes > (1u << 24)) throw ParseError("tree node count out of range");
      tree.nodes.resize(n_nodes);
      for (auto& n : tree.nodes) {
        n.feature = bin::get<std::int32_t>(is);
        n.threshold_bin = bin::get<std::int32_t>(is);
        n.threshold = bin::get<double>(is);
        n.left = bin::get<std::int32_t>(is);
        n.right = bin::get<std::int32_t>(is);
        n.value = bin::get<double>(is);
      }
      for (const auto& n : tree.nodes) {
        if (n.feature < 0) continue;
        const auto limit = static_cast<std::int32_t>(n_nodes);
        if (static_cast<std::uint64_t>(n.feature) >= n_features || n.left <= 0 || n.right <= 0 ||
            n.left >= limit || n.right >= limit)
          throw ParseError("corrupt tree in model file");
      }
    }
    m.add_iteration(std::move(per_class));
  }
  return m;
}

std::map<ClassId, double> balanced_weights(std::span<const ClassId> labels) {
  if (labels.empty()) throw ValidationError("balanced_weights: empty label list");
  std::map<ClassId, std::size_t> counts;
  for (ClassId c : labels) ++counts[c];
  const auto total = static_cast<double>(labels.size());
  const auto k = static_cast<double>(counts.size());
  std::map<ClassId, double> w;
  for (const auto& [c, n] : counts) w[c] = total / (k * static_cast<double>(n));
  return w;
}

std::vector<double> sample_weights(std::span<const ClassId> labels,
                                   const std::map<ClassId, double>& class_weights) {
  std::vector<double> w(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = class_weights.find(labels[i]);
    if (it == class_weights.end()) throw ValidationError("no weight for class " + std::to_string(labels[i]));
    w[i] = it->second;
  }
  return w;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) sum += (p[i] = std::exp(logits[i] - mx));
  for (double& v : p) v /= sum;
  return p;
}

double softmax_log_loss(std::span<const double> logits, std::size_t label_index) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - mx);
  return -(logits[label_index] - mx - std::log(sum));
}

std::vector<double> softmax_gradient(std::span<const double> logits, std::size_t label_index) {
  auto g = softmax(logits);
  g[label_index] -= 1.0;
  return g;
}

GbtModel fit(const FeatureMatrix& x, std::span<const ClassId> y, std::span<const double> weights,
             const GbtParams& params, const FitObserver& observer) {
  params.validate();
  if (y.size() != x.rows) throw ValidationError("fit: label count does not match row count");
  if (weights.size() != x.rows) throw ValidationError("fit: weight count does not match row count");
  if (x.values.size() != x.rows * x.cols) throw ShapeError("fit: matrix storage size mismatch");
  for (double v : x.values)
    if (!std::isfinite(v)) throw ValidationError("fit: feature matrix contains NaN or Inf");
  for (double w : weights)
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("fit: invalid sample weight");

  const std::set<ClassId> class_set(y.begin(), y.end());
  if (class_set.size() < 2) throw ValidationError("fit: need at least two classes");
  std::vector<ClassId> classes(class_set.begin(), class_set.end());
  const std::size_t k = classes.size();
  const std::size_t n = x.rows;

  std::vector<std::size_t> label_index(n);
  for (std::size_t i = 0; i < n; ++i)
    label_index[i] = static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), y[i]) - classes.begin());

  GbtModel model(classes, x.cols, x.schema_hash, params);
  const BinnedData data = bin_features(x, params.n_bins);
  const double weight_total = std::accumulate(weights.begin(), weights.end(), 0.0);

  std::vector<double> logits(n * k, 0.0);
  std::vector<double> probs(n * k);
  std::vector<double> grad(n), hess(n);
  std::vector<std::vector<double>> outputs(k, std::vector<double>(n));

  for (int it = 0; it < params.n_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      auto p = softmax(std::span<const double>(logits.data() + i * k, k));
      std::copy(p.begin(), p.end(), probs.begin() + static_cast<std::ptrdiff_t>(i * k));
    }
    std::vector<Tree> per_class;
    per_class.reserve(k);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p = probs[i * k + c];
        grad[i] = weights[i] * (p - (label_index[i] == c ? 1.0 : 0.0));
        hess[i] = weights[i] * std::max(p * (1.0 - p), kMinHessian);
      }
      TreeBuilder builder(data, params, grad, hess, outputs[c]);
      per_class.push_back(builder.build());
    }
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t i = 0; i < n; ++i) logits[i * k + c] += outputs[c][i];
    model.add_iteration(std::move(per_class));

    if (observer) {
      double loss = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        loss += weights[i] * softmax_log_loss(std::span<const double>(logits.data() + i * k, k), label_index[i]);
      observer(it, weight_total > 0.0 ? loss / weight_total : 0.0);
    }
  }
  return model;
}

}  // namespace shl
