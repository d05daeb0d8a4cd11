#pragma once

// Rotation-invariant aggregation of raw-axis features and assembly of
// configuration-specific feature vectors.
//
// Per-axis features are collapsed over {x, y, z} with symmetric statistics, so
// axis identity no longer matters. Flipping a sensor axis negates that axis's
// samples; of the 70 per-signal features only the time-domain skew changes
// under negation, so it is dropped before aggregating (69 features remain).
// That count is what makes the aggregated block 2 x 69 = 138 (stat2) or
// 3 x 69 = 207 (stat3, sort) values per modality.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shl/features.hpp"
#include "shl/processing.hpp"
#include "shl/types.hpp"

namespace shl {

enum class AggregationKind : std::uint8_t { Stat2, Stat3, Sort };

std::string_view aggregation_name(AggregationKind k);
std::size_t aggregation_width(AggregationKind k);  // 2 or 3 statistics
inline constexpr std::size_t kAggregatedFeatures = kFeaturesPerSignal - 1;

enum class SmvBlock : std::uint8_t { Smv = 0, SmvDt1, SmvDt2, SmvIntegral };
inline constexpr std::array<SmvBlock, 4> kAllSmvBlocks = {SmvBlock::Smv, SmvBlock::SmvDt1,
                                                          SmvBlock::SmvDt2, SmvBlock::SmvIntegral};
SignalKind signal_of(SmvBlock b);

// One feature configuration (a row of the ablation grid).
//
// Text form: tokens joined by '+', e.g. "rot_inv_stat2+smv+smv_dt2" or "raw".
// Tokens: raw, rot_inv_stat2, rot_inv_stat3, rot_inv_sort, smv, smv_dt1,
// smv_dt2, smv_integral, and no_znorm (disables spectral z-normalization).
struct AblationConfig {
  bool use_raw = false;
  std::optional<AggregationKind> rot_inv;
  std::array<bool, 4> smv_blocks{};
  bool znorm = true;

  bool has(SmvBlock b) const { return smv_blocks[static_cast<std::size_t>(b)]; }
  std::size_t smv_block_count() const;

  // Throws ValidationError on raw + rot_inv or an empty selection.
  void validate() const;

  friend bool operator==(const AblationConfig&, const AblationConfig&) = default;
};

AblationConfig parse_config(std::string_view text);
std::string to_string(const AblationConfig& config);

// The configuration used for the final model.
AblationConfig default_config();

// The 18 configurations of the published ablation grid.
std::vector<AblationConfig> paper_grid();

std::size_t config_length(const AblationConfig& config);

struct FeatureSchema {
  std::vector<std::string> names;
  std::uint64_t hash = 0;

  std::size_t size() const { return names.size(); }
};

// FNV-1a over the newline-joined column names.
std::uint64_t schema_hash(std::span<const std::string> names);

// Column names "<modality>_<signal>_<feature>" for per-signal blocks and
// "<modality>_rot_inv_<kind>_<feature>_<stat>" for aggregated blocks.
FeatureSchema feature_schema(const AblationConfig& config, ModalityMask mask);

// Collapses three 70-long axis feature vectors. Output is feature-major:
// for each of the 69 retained features, its 2 or 3 statistics.
std::vector<double> aggregate(std::span<const double> fx, std::span<const double> fy,
                              std::span<const double> fz, AggregationKind kind);

// 70 features for each of the 7 signals of each available modality.
struct SignalFeatureTable {
  std::array<std::optional<std::array<std::vector<double>, kSignalsPerModality>>, kNumModalities>
      modalities;

  const std::vector<double>& at(Modality m, SignalKind s) const;
};

SignalFeatureTable compute_signal_features(const DerivedSignalSet& dss,
                                           const FeatureOptions& options = {});

std::vector<double> build_feature_vector(const SignalFeatureTable& table,
                                         const AblationConfig& config, ModalityMask mask);
std::vector<double> build_feature_vector(const DerivedSignalSet& dss, const AblationConfig& config,
                                         ModalityMask mask);

}  // namespace shl
