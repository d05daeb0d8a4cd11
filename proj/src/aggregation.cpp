#include "shl/aggregation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace shl {

std::string_view aggregation_name(AggregationKind k) {
  switch (k) {
    case AggregationKind::Stat2: return "stat2";
    case AggregationKind::Stat3: return "stat3";
    case AggregationKind::Sort: return "sort";
  }
  return "?";
}

std::size_t aggregation_width(AggregationKind k) { return k == AggregationKind::Stat2 ? 2 : 3; }

SignalKind signal_of(SmvBlock b) {
  switch (b) {
    case SmvBlock::Smv: return SignalKind::Smv;
    case SmvBlock::SmvDt1: return SignalKind::SmvDt1;
    case SmvBlock::SmvDt2: return SignalKind::SmvDt2;
    case SmvBlock::SmvIntegral: return SignalKind::SmvIntegral;
  }
  return SignalKind::Smv;
}

std::size_t AblationConfig::smv_block_count() const {
  return static_cast<std::size_t>(std::count(smv_blocks.begin(), smv_blocks.end(), true));
}

void AblationConfig::validate() const {
  if (use_raw && rot_inv)
    throw ValidationError("config: raw and rot_inv aggregation are mutually exclusive");
  if (!use_raw && !rot_inv && smv_block_count() == 0)
    throw ValidationError("config: select at least one feature block");
}

AblationConfig parse_config(std::string_view text) {
  AblationConfig c;
  bool any = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('+', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string tok;
    for (char ch : text.substr(pos, end - pos))
      if (!std::isspace(static_cast<unsigned char>(ch)))
        tok += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    pos = end + 1;
    if (tok.empty()) throw ParseError("config: empty token in '" + std::string(text) + "'");
    any = true;

    auto set_rot = [&](AggregationKind k) {
      if (c.rot_inv) throw ValidationError("config: more than one rot_inv aggregation");
      c.rot_inv = k;
    };
    if (tok == "raw") c.use_raw = true;
    else if (tok == "rot_inv_stat2") set_rot(AggregationKind::Stat2);
    else if (tok == "rot_inv_stat3") set_rot(AggregationKind::Stat3);
    else if (tok == "rot_inv_sort") set_rot(AggregationKind::Sort);
    else if (tok == "smv") c.smv_blocks[0] = true;
    else if (tok == "smv_dt1") c.smv_blocks[1] = true;
    else if (tok == "smv_dt2") c.smv_blocks[2] = true;
    else if (tok == "smv_integral") c.smv_blocks[3] = true;
    else if (tok == "no_znorm") c.znorm = false;
    else throw ParseError("config: unknown token '" + tok + "'");
  }
  if (!any) throw ParseError("config: empty configuration");
  c.validate();
  return c;
}

std::string to_string(const AblationConfig& c) {
  std::string out;
  auto add = [&](std::string_view tok) {
    if (!out.empty()) out += '+';
    out += tok;
  };
  if (c.use_raw) add("raw");
  if (c.rot_inv) add("rot_inv_" + std::string(aggregation_name(*c.rot_inv)));
  for (SmvBlock b : kAllSmvBlocks)
    if (c.has(b)) add(signal_name(signal_of(b)));
  if (!c.znorm) add("no_znorm");
  return out;
}

AblationConfig default_config() { return parse_config("rot_inv_stat2+smv+smv_dt2"); }

std::vector<AblationConfig> paper_grid() {
  static constexpr std::array<std::string_view, 18> kRows = {
      "rot_inv_sort+smv+smv_dt2",
      "rot_inv_stat2+smv+smv_dt2",
      "rot_inv_sort+smv+smv_dt1",
      "rot_inv_stat2+smv+smv_dt1",
      "rot_inv_sort+smv",
      "rot_inv_stat2+smv",
      "smv+smv_dt1+smv_dt2+smv_integral",
      "smv+smv_dt2+smv_integral",
      "smv+smv_dt1+smv_integral",
      "smv+smv_dt1+smv_dt2",
      "smv+smv_dt2",
      "smv+smv_dt1",
      "rot_inv_sort",
      "rot_inv_stat3",
      "rot_inv_stat2",
      "raw",
      "smv+smv_integral",
      "smv",
  };
  std::vector<AblationConfig> out;
  for (auto row : kRows) out.push_back(parse_config(row));
  return out;
}

std::size_t config_length(const AblationConfig& c) {
  std::size_t per_modality = kFeaturesPerSignal * c.smv_block_count();
  if (c.use_raw) per_modality += kNumAxes * kFeaturesPerSignal;
  if (c.rot_inv) per_modality += kAggregatedFeatures * aggregation_width(*c.rot_inv);
  return 2 * per_modality;
}

std::uint64_t schema_hash(std::span<const std::string> names) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&](unsigned char b) {
    h ^= b;
    h *= 1099511628211ull;
  };
  for (const auto& n : names) {
    for (char ch : n) mix(static_cast<unsigned char>(ch));
    mix('\n');
  }
  return h;
}

namespace {

std::array<std::string_view, 3> stat_names(AggregationKind k) {
  switch (k) {
    case AggregationKind::Stat2: return {"mean", "std", ""};
    case AggregationKind::Stat3: return {"mean", "std", "skew"};
    case AggregationKind::Sort: return {"min", "mid", "max"};
  }
  return {};
}

}  // namespace

FeatureSchema feature_schema(const AblationConfig& config, ModalityMask mask) {
  config.validate();
  const auto& catalog = feature_catalog();
  const std::size_t skip = signal_skew_index();
  FeatureSchema s;
  s.names.reserve(config_length(config));
  for (Modality m : mask.available()) {
    const std::string mod(modality_tag(m));
    if (config.use_raw)
      for (SignalKind axis : {SignalKind::X, SignalKind::Y, SignalKind::Z})
        for (const auto& f : catalog) s.names.push_back(mod + "_" + std::string(signal_name(axis)) + "_" + f.name);
    if (config.rot_inv) {
      const auto kind = *config.rot_inv;
      const auto stats = stat_names(kind);
      const std::string prefix = mod + "_rot_inv_" + std::string(aggregation_name(kind)) + "_";
      for (std::size_t i = 0; i < catalog.size(); ++i) {
        if (i == skip) continue;
        for (std::size_t j = 0; j < aggregation_width(kind); ++j)
          s.names.push_back(prefix + catalog[i].name + "_" + std::string(stats[j]));
      }
    }
    for (SmvBlock b : kAllSmvBlocks) {
      if (!config.has(b)) continue;
      for (const auto& f : catalog)
        s.names.push_back(mod + "_" + std::string(signal_name(signal_of(b))) + "_" + f.name);
    }
  }
  s.hash = schema_hash(s.names);
  return s;
}

std::vector<double> aggregate(std::span<const double> fx, std::span<const double> fy,
                              std::span<const double> fz, AggregationKind kind) {
  if (fx.size() != kFeaturesPerSignal || fy.size() != kFeaturesPerSignal ||
      fz.size() != kFeaturesPerSignal)
    throw SchemaError("aggregate: expected three vectors of " + std::to_string(kFeaturesPerSignal) +
                      " features");
  const std::size_t skip = signal_skew_index();
  std::vector<double> out;
  out.reserve(kAggregatedFeatures * aggregation_width(kind));

  for (std::size_t i = 0; i < kFeaturesPerSignal; ++i) {
    if (i == skip) continue;
    // Sorting first makes every statistic exactly symmetric in the axes.
    std::array<double, 3> v = {fx[i], fy[i], fz[i]};
    std::sort(v.begin(), v.end());
    if (kind == AggregationKind::Sort) {
      out.insert(out.end(), v.begin(), v.end());
      continue;
    }
    const bool flat = v[0] == v[2];
    const double mean = (v[0] + v[1] + v[2]) / 3.0;
    double m2 = 0.0, m3 = 0.0;
    for (double x : v) {
      const double d = x - mean;
      m2 += d * d;
      m3 += d * d * d;
    }
    m2 /= 3.0;
    m3 /= 3.0;
    const double sd = flat ? 0.0 : std::sqrt(m2);
    out.push_back(mean);
    out.push_back(sd);
    if (kind == AggregationKind::Stat3) {
      const double scale = std::max({1.0, std::abs(v[0]), std::abs(v[2])});
      out.push_back(sd <= 1e-12 * scale ? 0.0 : m3 / (m2 * sd));
    }
  }
  return out;
}

const std::vector<double>& SignalFeatureTable::at(Modality m, SignalKind s) const {
  const auto& mod = modalities[index_of(m)];
  if (!mod) throw SchemaError("features missing for modality " + std::string(modality_name(m)));
  return (*mod)[static_cast<std::size_t>(s)];
}

SignalFeatureTable compute_signal_features(const DerivedSignalSet& dss, const FeatureOptions& options) {
  SignalFeatureTable t;
  for (Modality m : kAllModalities) {
    const auto& sig = dss.modalities[index_of(m)];
    if (!sig) continue;
    auto& dst = t.modalities[index_of(m)].emplace();
    for (std::size_t s = 0; s < kSignalsPerModality; ++s)
      dst[s] = extract_signal_features((*sig)[s], options);
  }
  return t;
}

std::vector<double> build_feature_vector(const SignalFeatureTable& table,
                                         const AblationConfig& config, ModalityMask mask) {
  config.validate();
  std::vector<double> out;
  out.reserve(config_length(config));
  for (Modality m : mask.available()) {
    const auto& x = table.at(m, SignalKind::X);
    const auto& y = table.at(m, SignalKind::Y);
    const auto& z = table.at(m, SignalKind::Z);
    if (config.use_raw)
      for (const auto* f : {&x, &y, &z}) out.insert(out.end(), f->begin(), f->end());
    if (config.rot_inv) {
      auto agg = aggregate(x, y, z, *config.rot_inv);
      out.insert(out.end(), agg.begin(), agg.end());
    }
    for (SmvBlock b : kAllSmvBlocks) {
      if (!config.has(b)) continue;
      const auto& f = table.at(m, signal_of(b));
      out.insert(out.end(), f.begin(), f.end());
    }
  }
  return out;
}

std::vector<double> build_feature_vector(const DerivedSignalSet& dss, const AblationConfig& config,
                                         ModalityMask mask) {
  FeatureOptions options;
  options.znorm = config.znorm;
  return build_feature_vector(compute_signal_features(dss, options), config, mask);
}

}  // namespace shl
