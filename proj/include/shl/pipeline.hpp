#pragma once

// Training and inference protocol.
//
// One model family per missing modality: for mask m, features come only from
// the two other sensors, and the model is trained on every window whose
// missing modality is either none (unmasked training data) or m. Each family
// holds K fold models plus one model fitted on all of its rows. Inference
// routes a window by its detected mask and combines the K fold models by
// majority vote.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shl/aggregation.hpp"
#include "shl/data_io.hpp"
#include "shl/gbt.hpp"
#include "shl/metrics.hpp"

namespace shl {

// --- feature preparation ---------------------------------------------------

// A window after scaling, mask detection and per-signal feature extraction.
// Features are computed for every modality that carries data.
struct PreparedWindow {
  ClassId label = kMinClassId;
  Location location = Location::Unknown;
  std::int64_t window_id = 0;
  std::optional<ModalityMask> missing;
  SignalFeatureTable features;
};

std::vector<PreparedWindow> prepare_windows(std::span<const RawWindow> windows,
                                            const FeatureOptions& options = {});

// Mask used for windows where no modality is missing (only seen when
// predicting on unmasked data).
inline constexpr ModalityMask kUnmaskedFallback{Modality::Gyr};

ModalityMask routing_mask(const PreparedWindow& w);

// Whether `w` can be used to train the model family for `mask`.
bool trains_mask(const PreparedWindow& w, ModalityMask mask);

FeatureMatrix build_matrix(std::span<const PreparedWindow> windows, std::span<const std::size_t> rows,
                           const AblationConfig& config, ModalityMask mask);

// --- cross-validation ------------------------------------------------------

struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Stratified shuffled K-fold split: each class is shuffled and dealt
// round-robin over the folds, continuing the rotation across classes, so fold
// sizes differ by at most one overall and per class. Indices are ascending
// within each train/test list.
std::vector<FoldSplit> kfold_split(std::span<const ClassId> labels, int k, std::uint64_t seed);
std::vector<FoldSplit> kfold_split(std::size_t n, int k, std::uint64_t seed);

// --- model bundle ----------------------------------------------------------

struct MaskModels {
  ModalityMask mask;
  FeatureSchema schema;
  std::vector<GbtModel> folds;
  GbtModel full;
  // Training rows of this family, identified by window id, and the fold in
  // which each row was held out.
  std::vector<std::int64_t> window_ids;
  std::vector<std::int32_t> fold_of_row;
};

struct ModelBundle {
  AblationConfig config;
  int k = 3;
  std::uint64_t seed = 0;
  GbtParams params;
  std::array<MaskModels, kNumModalities> masks;

  const MaskModels& for_mask(ModalityMask m) const { return masks[index_of(m.missing)]; }
  std::size_t model_count() const;
  std::vector<ClassId> classes() const;

  void save(std::ostream& os) const;
  static ModelBundle load(std::istream& is);
  void save(const std::filesystem::path& path) const;
  static ModelBundle load(const std::filesystem::path& path);
};

struct TrainOptions {
  int k = 3;
  std::uint64_t seed = 0;
  GbtParams params;
};

ModelBundle train_bundle(std::span<const PreparedWindow> train, const AblationConfig& config,
                         const TrainOptions& options);

// --- inference -------------------------------------------------------------

// Which model scored which window. model = fold index, or -1 for the
// full-fit model.
struct RoutingEvent {
  ModalityMask mask;
  int model;
  std::size_t window_index;
};
using RoutingLog = std::vector<RoutingEvent>;

// Majority vote over per-fold probability rows (each row ordered like
// `classes`). Vote ties go to the larger summed probability, then to the
// lowest class id.
ClassId majority_vote(std::span<const std::vector<double>> fold_probs, std::span<const ClassId> classes);

std::vector<ClassId> majority_vote_predict(const ModelBundle& bundle,
                                           std::span<const PreparedWindow> windows,
                                           RoutingLog* log = nullptr);

std::vector<ClassId> full_fit_predict(const ModelBundle& bundle, std::span<const PreparedWindow> windows,
                                      RoutingLog* log = nullptr);

// Out-of-fold macro F1 per mask (indexed by the missing modality). Each fold
// model scores only the rows it did not see.
std::array<std::optional<double>, kNumModalities> oof_score(const ModelBundle& bundle,
                                                            std::span<const PreparedWindow> train,
                                                            RoutingLog* log = nullptr);

// --- ablation --------------------------------------------------------------

struct AblationRow {
  std::string config;
  std::optional<double> val;
  std::optional<double> val_mv;
  std::array<std::optional<double>, kNumModalities> oof;
  std::array<std::optional<double>, kNumModalities> val_per_mask;
  std::size_t n_features = 0;
};

struct AblationReport {
  std::vector<AblationRow> rows;  // sorted by overall Val, descending
};

AblationReport run_ablation(std::span<const RawWindow> train, std::span<const RawWindow> val,
                            std::span<const AblationConfig> configs, const TrainOptions& options);

// --- final model -----------------------------------------------------------

struct FinalModelFlags {
  bool exclude_hand = false;
  bool include_validation = false;
};

// Training rows: train (minus Hand when exclude_hand) plus val when
// include_validation. Validation windows only train the family of their own
// mask.
std::vector<RawWindow> final_training_windows(std::span<const RawWindow> train,
                                              std::span<const RawWindow> val, FinalModelFlags flags);

ModelBundle final_model(std::span<const RawWindow> train, std::span<const RawWindow> val,
                        const AblationConfig& config, FinalModelFlags flags, const TrainOptions& options);

}  // namespace shl
