#pragma once

// File outputs: feature matrices, ablation tables, confusion matrices and
// label files. Every writer goes through write_file_atomic.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "shl/aggregation.hpp"
#include "shl/gbt.hpp"
#include "shl/metrics.hpp"
#include "shl/pipeline.hpp"

namespace shl {

// CSV with header "window_id,label,<schema names...>", one row per window.
void write_feature_csv(const std::filesystem::path& path, const FeatureSchema& schema,
                       const FeatureMatrix& x, std::span<const ClassId> labels,
                       std::span<const std::int64_t> window_ids);

// One column name per line.
void write_schema_file(const std::filesystem::path& path, const FeatureSchema& schema);

// Columns: configuration, Overall Val, Overall Val_MV, then OOF and Val for
// Acc = 0, Gyr = 0 and Mag = 0, then the feature count. Missing values are NA.
void write_ablation_csv(const std::filesystem::path& path, const AblationReport& report);
void write_ablation_json(const std::filesystem::path& path, const AblationReport& report);
std::string format_ablation_table(const AblationReport& report);

// {"<label>": {"classes": [...], "matrix": [[...]], "macro_f1": x}, ...}
void write_confusion_json(const std::filesystem::path& path,
                          const std::map<std::string, ConfusionMatrix>& matrices);

void write_label_file(const std::filesystem::path& path, std::span<const ClassId> labels,
                      std::size_t repeat = 1);
std::vector<ClassId> read_label_file(const std::filesystem::path& path);

}  // namespace shl
