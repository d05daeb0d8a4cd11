#include "shl/report.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "shl/atomic_file.hpp"

namespace shl {

namespace {

using nlohmann::json;

std::string fmt_score(const std::optional<double>& v) {
  if (!v) return "NA";
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << *v;
  return os.str();
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

constexpr const char* kAblationHeader =
    "configuration,val,val_mv,acc0_oof,acc0_val,gyr0_oof,gyr0_val,mag0_oof,mag0_val,n_feats";

}  // namespace

void write_feature_csv(const std::filesystem::path& path, const FeatureSchema& schema,
                       const FeatureMatrix& x, std::span<const ClassId> labels,
                       std::span<const std::int64_t> window_ids) {
  if (x.cols != schema.size() || labels.size() != x.rows || window_ids.size() != x.rows)
    throw ShapeError("feature export: matrix, schema and label sizes disagree");
  write_file_atomic(path, [&](std::ostream& os) {
    os << "window_id,label";
    for (const auto& n : schema.names) os << ',' << n;
    os << '\n';
    os << std::setprecision(17);
    for (std::size_t i = 0; i < x.rows; ++i) {
      os << window_ids[i] << ',' << labels[i];
      for (double v : x.row(i)) os << ',' << v;
      os << '\n';
    }
  });
}

void write_schema_file(const std::filesystem::path& path, const FeatureSchema& schema) {
  write_file_atomic(path, [&](std::ostream& os) {
    for (const auto& n : schema.names) os << n << '\n';
  });
}

void write_ablation_csv(const std::filesystem::path& path, const AblationReport& report) {
  write_file_atomic(path, [&](std::ostream& os) {
    os << kAblationHeader << '\n';
    for (const auto& r : report.rows) {
      os << r.config << ',' << fmt_score(r.val) << ',' << fmt_score(r.val_mv);
      for (std::size_t m = 0; m < kNumModalities; ++m)
        os << ',' << fmt_score(r.oof[m]) << ',' << fmt_score(r.val_per_mask[m]);
      os << ',' << r.n_features << '\n';
    }
  });
}

void write_ablation_json(const std::filesystem::path& path, const AblationReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json per_mask = json::object();
    for (Modality m : kAllModalities)
      per_mask[std::string(modality_name(m)) + "=0"] = {{"oof", opt_json(r.oof[index_of(m)])},
                                                        {"val", opt_json(r.val_per_mask[index_of(m)])}};
    rows.push_back({{"configuration", r.config},
                    {"overall", {{"val", opt_json(r.val)}, {"val_mv", opt_json(r.val_mv)}}},
                    {"missing", per_mask},
                    {"n_feats", r.n_features}});
  }
  write_file_atomic(path, [&](std::ostream& os) { os << json{{"rows", rows}}.dump(2) << '\n'; });
}

std::string format_ablation_table(const AblationReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(36) << "Configuration" << " | " << std::setw(6) << "Val" << ' '
     << std::setw(6) << "ValMV" << " | " << "Acc=0 OOF/Val  | Gyr=0 OOF/Val  | Mag=0 OOF/Val  | #feats\n";
  for (const auto& r : report.rows) {
    os << std::left << std::setw(36) << r.config << " | " << std::setw(6) << fmt_score(r.val) << ' '
       << std::setw(6) << fmt_score(r.val_mv);
    for (std::size_t m = 0; m < kNumModalities; ++m)
      os << " | " << std::setw(6) << fmt_score(r.oof[m]) << ' ' << std::setw(7) << fmt_score(r.val_per_mask[m]);
    os << " | " << r.n_features << '\n';
  }
  return os.str();
}

void write_confusion_json(const std::filesystem::path& path,
                          const std::map<std::string, ConfusionMatrix>& matrices) {
  json out = json::object();
  for (const auto& [name, cm] : matrices) {
    json classes = json::array();
    for (ClassId c : cm.classes) classes.push_back({{"id", c}, {"name", std::string(label_name(c))}});
    json mat = json::array();
    for (std::size_t i = 0; i < cm.classes.size(); ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < cm.classes.size(); ++j) row.push_back(cm.at(i, j));
      mat.push_back(row);
    }
    const auto f1 = per_class_f1(cm);
    double macro = 0.0;
    for (double v : f1) macro += v;
    if (!f1.empty()) macro /= static_cast<double>(f1.size());
    out[name] = {{"classes", classes}, {"matrix", mat}, {"per_class_f1", f1}, {"macro_f1", macro},
                 {"count", cm.total()}};
  }
  write_file_atomic(path, [&](std::ostream& os) { os << out.dump(2) << '\n'; });
}

void write_label_file(const std::filesystem::path& path, std::span<const ClassId> labels, std::size_t repeat) {
  write_file_atomic(path, [&](std::ostream& os) {
    for (ClassId c : labels) {
      for (std::size_t r = 0; r < repeat; ++r) os << (r ? " " : "") << c;
      os << '\n';
    }
  });
}

std::vector<ClassId> read_label_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label file: " + path.string());
  std::vector<ClassId> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    ClassId id = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), id);
    if (ec != std::errc{} || ptr != tok.data() + tok.size() || !is_valid_label(id))
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": invalid label '" + tok + "'");
    out.push_back(id);
  }
  return out;
}

}  // namespace shl
