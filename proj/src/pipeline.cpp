#include "shl/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "shl/atomic_file.hpp"
#include "shl/binary_io.hpp"
#include "shl/parallel.hpp"
#include "shl/processing.hpp"

namespace shl {

namespace {

constexpr std::uint32_t kBundleVersion = 1;

// Probability rows of `model` re-indexed to `classes` (classes the model never
// saw get probability 0).
std::vector<std::vector<double>> aligned_proba(const GbtModel& model, const FeatureMatrix& x,
                                               std::span<const ClassId> classes) {
  const auto probs = model.predict_proba(x);
  const auto& mc = model.classes();
  std::vector<std::size_t> column(mc.size());
  for (std::size_t c = 0; c < mc.size(); ++c) {
    auto it = std::find(classes.begin(), classes.end(), mc[c]);
    if (it == classes.end()) throw std::logic_error("fold model class outside the bundle classes");
    column[c] = static_cast<std::size_t>(it - classes.begin());
  }
  std::vector<std::vector<double>> out(x.rows, std::vector<double>(classes.size(), 0.0));
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t c = 0; c < mc.size(); ++c) out[i][column[c]] = probs[i * mc.size() + c];
  return out;
}

std::vector<std::size_t> rows_for_mask(std::span<const PreparedWindow> windows, ModalityMask mask) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < windows.size(); ++i)
    if (trains_mask(windows[i], mask)) rows.push_back(i);
  return rows;
}

std::vector<std::size_t> routed_to(std::span<const PreparedWindow> windows, ModalityMask mask) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < windows.size(); ++i)
    if (routing_mask(windows[i]) == mask) rows.push_back(i);
  return rows;
}

void check_bundle_schema(const MaskModels& mm, const AblationConfig& config) {
  const auto expected = feature_schema(config, mm.mask);
  if (expected.hash != mm.schema.hash || expected.names != mm.schema.names)
    throw SchemaError("model bundle schema for missing " + std::string(modality_name(mm.mask.missing)) +
                      " does not match the feature extractor");
}

}  // namespace

// --- feature preparation ---------------------------------------------------

std::vector<PreparedWindow> prepare_windows(std::span<const RawWindow> windows, const FeatureOptions& options) {
  std::vector<PreparedWindow> out(windows.size());
  parallel_for(windows.size(), [&](std::size_t i) {
    const RawWindow& raw = windows[i];
    PreparedWindow& p = out[i];
    p.label = raw.label;
    p.location = raw.location;
    p.window_id = raw.window_id;
    p.missing = detect_missing_modality(raw);
    const RawWindow scaled = scale_units(raw);
    DerivedSignalSet dss = p.missing ? derive_signals(scaled, *p.missing) : derive_all_signals(scaled);
    p.features = compute_signal_features(dss, options);
  });
  return out;
}

ModalityMask routing_mask(const PreparedWindow& w) { return w.missing.value_or(kUnmaskedFallback); }

bool trains_mask(const PreparedWindow& w, ModalityMask mask) { return !w.missing || *w.missing == mask; }

FeatureMatrix build_matrix(std::span<const PreparedWindow> windows, std::span<const std::size_t> rows,
                           const AblationConfig& config, ModalityMask mask) {
  const FeatureSchema schema = feature_schema(config, mask);
  FeatureMatrix x(rows.size(), schema.size(), schema.hash);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto v = build_feature_vector(windows[rows[r]].features, config, mask);
    std::copy(v.begin(), v.end(), x.row(r).begin());
  }
  return x;
}

// --- cross-validation ------------------------------------------------------

std::vector<FoldSplit> kfold_split(std::span<const ClassId> labels, int k, std::uint64_t seed) {
  if (k < 1) throw ValidationError("k must be positive");
  const auto kk = static_cast<std::size_t>(k);
  if (labels.size() < kk)
    throw ValidationError("cannot split " + std::to_string(labels.size()) + " rows into " +
                          std::to_string(k) + " folds");

  std::map<ClassId, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> fold_of(labels.size());
  std::size_t position = 0;
  for (auto& [cls, idx] : by_class) {
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
    for (std::size_t j : idx) fold_of[j] = position++ % kk;
  }

  std::vector<FoldSplit> folds(kk);
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t f = 0; f < kk; ++f) (fold_of[i] == f ? folds[f].test : folds[f].train).push_back(i);
  return folds;
}

std::vector<FoldSplit> kfold_split(std::size_t n, int k, std::uint64_t seed) {
  const std::vector<ClassId> labels(n, kMinClassId);
  return kfold_split(labels, k, seed);
}

// --- model bundle ----------------------------------------------------------

std::size_t ModelBundle::model_count() const {
  std::size_t n = 0;
  for (const auto& m : masks) n += m.folds.size() + 1;
  return n;
}

std::vector<ClassId> ModelBundle::classes() const {
  std::set<ClassId> s;
  for (const auto& m : masks) s.insert(m.full.classes().begin(), m.full.classes().end());
  return {s.begin(), s.end()};
}

void ModelBundle::save(std::ostream& os) const {
  bin::put_magic(os, "SHLB");
  bin::put<std::uint32_t>(os, kBundleVersion);
  bin::put_string(os, to_string(config));
  bin::put<std::int32_t>(os, k);
  bin::put<std::uint64_t>(os, seed);
  for (const auto& mm : masks) {
    bin::put<std::uint8_t>(os, static_cast<std::uint8_t>(mm.mask.missing));
    bin::put<std::uint64_t>(os, mm.schema.hash);
    bin::put<std::uint64_t>(os, mm.schema.names.size());
    for (const auto& n : mm.schema.names) bin::put_string(os, n);
    bin::put_vector(os, mm.window_ids);
    bin::put_vector(os, mm.fold_of_row);
    bin::put<std::uint32_t>(os, static_cast<std::uint32_t>(mm.folds.size()));
    for (const auto& f : mm.folds) f.save(os);
    mm.full.save(os);
  }
}

ModelBundle ModelBundle::load(std::istream& is) {
  bin::expect_magic(is, "SHLB", "model bundle");
  if (auto v = bin::get<std::uint32_t>(is); v != kBundleVersion)
    throw ParseError("unsupported model bundle version " + std::to_string(v));
  ModelBundle b;
  b.config = parse_config(bin::get_string(is, 4096));
  b.k = bin::get<std::int32_t>(is);
  b.seed = bin::get<std::uint64_t>(is);
  for (std::size_t i = 0; i < kNumModalities; ++i) {
    MaskModels& mm = b.masks[i];
    const auto missing = bin::get<std::uint8_t>(is);
    if (missing != i) throw ParseError("model bundle masks out of order");
    mm.mask = ModalityMask{static_cast<Modality>(missing)};
    mm.schema.hash = bin::get<std::uint64_t>(is);
    const auto n_names = bin::get<std::uint64_t>(is);
    if (n_names > (1u << 20)) throw ParseError("schema size out of range");
    mm.schema.names.resize(n_names);
    for (auto& n : mm.schema.names) n = bin::get_string(is, 4096);
    if (schema_hash(mm.schema.names) != mm.schema.hash) throw ParseError("schema hash does not match names");
    mm.window_ids = bin::get_vector<std::int64_t>(is);
    mm.fold_of_row = bin::get_vector<std::int32_t>(is);
    if (mm.window_ids.size() != mm.fold_of_row.size()) throw ParseError("fold table size mismatch");
    const auto n_folds = bin::get<std::uint32_t>(is);
    if (static_cast<int>(n_folds) != b.k) throw ParseError("fold model count does not match k");
    for (std::uint32_t f = 0; f < n_folds; ++f) mm.folds.push_back(GbtModel::load(is));
    mm.full = GbtModel::load(is);
    b.params = mm.full.params();
  }
  return b;
}

void ModelBundle::save(const std::filesystem::path& path) const {
  write_file_atomic(path, [&](std::ostream& os) { save(os); }, true);
}

ModelBundle ModelBundle::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open model file: " + path.string());
  return load(is);
}

ModelBundle train_bundle(std::span<const PreparedWindow> train, const AblationConfig& config,
                         const TrainOptions& options) {
  config.validate();
  options.params.validate();
  ModelBundle bundle;
  bundle.config = config;
  bundle.k = options.k;
  bundle.seed = options.seed;
  bundle.params = options.params;

  struct Job {
    std::size_t mask;
    int fold;  // -1 = full fit
  };
  std::array<FeatureMatrix, kNumModalities> matrices;
  std::array<std::vector<ClassId>, kNumModalities> labels;
  std::array<std::vector<FoldSplit>, kNumModalities> splits;
  std::vector<Job> jobs;

  for (std::size_t m = 0; m < kNumModalities; ++m) {
    MaskModels& mm = bundle.masks[m];
    mm.mask = kAllMasks[m];
    mm.schema = feature_schema(config, mm.mask);
    const auto rows = rows_for_mask(train, mm.mask);
    if (rows.empty())
      throw ValidationError("no training windows for missing " + std::string(modality_name(mm.mask.missing)));
    matrices[m] = build_matrix(train, rows, config, mm.mask);
    for (auto r : rows) {
      labels[m].push_back(train[r].label);
      mm.window_ids.push_back(train[r].window_id);
    }
    splits[m] = kfold_split(labels[m], options.k, options.seed);
    mm.fold_of_row.assign(rows.size(), -1);
    for (std::size_t f = 0; f < splits[m].size(); ++f)
      for (auto r : splits[m][f].test) mm.fold_of_row[r] = static_cast<std::int32_t>(f);
    mm.folds.resize(static_cast<std::size_t>(options.k));
    for (int f = 0; f < options.k; ++f) jobs.push_back({m, f});
    jobs.push_back({m, -1});
  }

  parallel_for(jobs.size(), [&](std::size_t j) {
    const Job job = jobs[j];
    const FeatureMatrix& full = matrices[job.mask];
    const auto& y_all = labels[job.mask];
    MaskModels& mm = bundle.masks[job.mask];
    if (job.fold < 0) {
      const auto w = sample_weights(y_all, balanced_weights(y_all));
      mm.full = fit(full, y_all, w, options.params);
      return;
    }
    const auto& idx = splits[job.mask][static_cast<std::size_t>(job.fold)].train;
    const FeatureMatrix x = select_rows(full, idx);
    std::vector<ClassId> y(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) y[i] = y_all[idx[i]];
    const auto w = sample_weights(y, balanced_weights(y));
    mm.folds[static_cast<std::size_t>(job.fold)] = fit(x, y, w, options.params);
  });
  return bundle;
}

// --- inference -------------------------------------------------------------

ClassId majority_vote(std::span<const std::vector<double>> fold_probs, std::span<const ClassId> classes) {
  const std::size_t k = classes.size();
  if (fold_probs.empty() || k == 0) throw ValidationError("majority_vote: no votes");
  std::vector<int> votes(k, 0);
  std::vector<double> mass(k, 0.0);
  for (const auto& p : fold_probs) {
    if (p.size() != k) throw ValidationError("majority_vote: probability row size mismatch");
    ++votes[static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())];
    for (std::size_t c = 0; c < k; ++c) mass[c] += p[c];
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < k; ++c) {
    if (votes[c] > votes[best] || (votes[c] == votes[best] && mass[c] > mass[best]) ||
        (votes[c] == votes[best] && mass[c] == mass[best] && classes[c] < classes[best]))
      best = c;
  }
  return classes[best];
}

std::vector<ClassId> majority_vote_predict(const ModelBundle& bundle, std::span<const PreparedWindow> windows,
                                           RoutingLog* log) {
  const auto classes = bundle.classes();
  std::vector<ClassId> out(windows.size(), kMinClassId);
  for (const auto& mm : bundle.masks) {
    const auto rows = routed_to(windows, mm.mask);
    if (rows.empty()) continue;
    check_bundle_schema(mm, bundle.config);
    const FeatureMatrix x = build_matrix(windows, rows, bundle.config, mm.mask);
    std::vector<std::vector<std::vector<double>>> per_fold;
    for (std::size_t f = 0; f < mm.folds.size(); ++f) {
      per_fold.push_back(aligned_proba(mm.folds[f], x, classes));
      if (log)
        for (auto r : rows) log->push_back({mm.mask, static_cast<int>(f), r});
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      std::vector<std::vector<double>> votes;
      for (const auto& fp : per_fold) votes.push_back(fp[i]);
      out[rows[i]] = majority_vote(votes, classes);
    }
  }
  return out;
}

std::vector<ClassId> full_fit_predict(const ModelBundle& bundle, std::span<const PreparedWindow> windows,
                                      RoutingLog* log) {
  std::vector<ClassId> out(windows.size(), kMinClassId);
  for (const auto& mm : bundle.masks) {
    const auto rows = routed_to(windows, mm.mask);
    if (rows.empty()) continue;
    check_bundle_schema(mm, bundle.config);
    const auto pred = mm.full.predict(build_matrix(windows, rows, bundle.config, mm.mask));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out[rows[i]] = pred[i];
      if (log) log->push_back({mm.mask, -1, rows[i]});
    }
  }
  return out;
}

std::array<std::optional<double>, kNumModalities> oof_score(const ModelBundle& bundle,
                                                            std::span<const PreparedWindow> train,
                                                            RoutingLog* log) {
  std::array<std::optional<double>, kNumModalities> out;
  for (std::size_t m = 0; m < kNumModalities; ++m) {
    const MaskModels& mm = bundle.masks[m];
    const auto rows = rows_for_mask(train, mm.mask);
    bool same = rows.size() == mm.window_ids.size();
    for (std::size_t i = 0; same && i < rows.size(); ++i) same = train[rows[i]].window_id == mm.window_ids[i];
    if (!same) throw ValidationError("windows do not match the bundle's training rows");
    if (rows.empty()) continue;

    std::vector<ClassId> y_true, y_pred;
    for (std::size_t f = 0; f < mm.folds.size(); ++f) {
      std::vector<std::size_t> held_out;
      for (std::size_t i = 0; i < rows.size(); ++i)
        if (mm.fold_of_row[i] == static_cast<std::int32_t>(f)) held_out.push_back(rows[i]);
      if (held_out.empty()) continue;
      const auto pred = mm.folds[f].predict(build_matrix(train, held_out, bundle.config, mm.mask));
      for (std::size_t i = 0; i < held_out.size(); ++i) {
        y_true.push_back(train[held_out[i]].label);
        y_pred.push_back(pred[i]);
        if (log) log->push_back({mm.mask, static_cast<int>(f), held_out[i]});
      }
    }
    out[m] = macro_f1(y_true, y_pred, mm.full.classes());
  }
  return out;
}

// --- ablation --------------------------------------------------------------

AblationReport run_ablation(std::span<const RawWindow> train, std::span<const RawWindow> val,
                            std::span<const AblationConfig> configs, const TrainOptions& options) {
  if (configs.empty()) throw ValidationError("ablation needs at least one configuration");

  std::map<bool, std::pair<std::vector<PreparedWindow>, std::vector<PreparedWindow>>> prepared;
  auto prepared_for = [&](bool zn) -> const auto& {
    auto it = prepared.find(zn);
    if (it == prepared.end()) {
      FeatureOptions fo;
      fo.znorm = zn;
      it = prepared.emplace(zn, std::make_pair(prepare_windows(train, fo), prepare_windows(val, fo))).first;
    }
    return it->second;
  };

  AblationReport report;
  for (const auto& config : configs) {
    const auto& [ptrain, pval] = prepared_for(config.znorm);
    const ModelBundle bundle = train_bundle(ptrain, config, options);

    AblationRow row;
    row.config = to_string(config);
    row.n_features = config_length(config);
    row.oof = oof_score(bundle, ptrain);

    if (!pval.empty()) {
      const auto classes = bundle.classes();
      std::vector<ClassId> y_true(pval.size());
      for (std::size_t i = 0; i < pval.size(); ++i) y_true[i] = pval[i].label;
      const auto full_pred = full_fit_predict(bundle, pval);
      row.val = macro_f1(y_true, full_pred, classes);
      row.val_mv = macro_f1(y_true, majority_vote_predict(bundle, pval), classes);
      for (std::size_t m = 0; m < kNumModalities; ++m) {
        std::vector<ClassId> t, p;
        for (std::size_t i = 0; i < pval.size(); ++i)
          if (pval[i].missing && pval[i].missing->missing == kAllModalities[m]) {
            t.push_back(y_true[i]);
            p.push_back(full_pred[i]);
          }
        if (!t.empty()) row.val_per_mask[m] = macro_f1(t, p, bundle.masks[m].full.classes());
      }
    }
    report.rows.push_back(std::move(row));
  }
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const AblationRow& a, const AblationRow& b) {
    return a.val.value_or(-1.0) > b.val.value_or(-1.0);
  });
  return report;
}

// --- final model -----------------------------------------------------------

std::vector<RawWindow> final_training_windows(std::span<const RawWindow> train, std::span<const RawWindow> val,
                                              FinalModelFlags flags) {
  std::set<Location> excluded;
  if (flags.exclude_hand) excluded.insert(Location::Hand);
  auto rows = filter_locations(train, excluded);
  if (flags.include_validation) rows.insert(rows.end(), val.begin(), val.end());
  return rows;
}

ModelBundle final_model(std::span<const RawWindow> train, std::span<const RawWindow> val,
                        const AblationConfig& config, FinalModelFlags flags, const TrainOptions& options) {
  const auto rows = final_training_windows(train, val, flags);
  FeatureOptions fo;
  fo.znorm = config.znorm;
  return train_bundle(prepare_windows(rows, fo), config, options);
}

}  // namespace shl
