#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "oracles.hpp"
#include "shl/aggregation.hpp"
#include "shl/data_io.hpp"
#include "test_util.hpp"

using namespace shl;
using V = std::vector<double>;

namespace {

// "# feats" column of the published ablation table, in grid order.
struct GridRow {
  const char* config;
  std::size_t n_feats;
};
constexpr GridRow kPublished[] = {
    {"rot_inv_sort+smv+smv_dt2", 694},
    {"rot_inv_stat2+smv+smv_dt2", 556},
    {"rot_inv_sort+smv+smv_dt1", 694},
    {"rot_inv_stat2+smv+smv_dt1", 556},
    {"rot_inv_sort+smv", 554},
    {"rot_inv_stat2+smv", 416},
    {"smv+smv_dt1+smv_dt2+smv_integral", 560},
    {"smv+smv_dt2+smv_integral", 420},
    {"smv+smv_dt1+smv_integral", 420},
    {"smv+smv_dt1+smv_dt2", 420},
    {"smv+smv_dt2", 280},
    {"smv+smv_dt1", 280},
    {"rot_inv_sort", 414},
    {"rot_inv_stat3", 414},
    {"rot_inv_stat2", 276},
    {"raw", 420},
    {"smv+smv_integral", 280},
    {"smv", 140},
};

V random_features(std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  V f(kFeaturesPerSignal);
  for (double& v : f) v = nd(rng);
  return f;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config("rot_inv_stat2+smv+smv_dt2");
  CHECK_FALSE(c.use_raw);
  CHECK(c.rot_inv == AggregationKind::Stat2);
  CHECK(c.has(SmvBlock::Smv));
  CHECK(c.has(SmvBlock::SmvDt2));
  CHECK_FALSE(c.has(SmvBlock::SmvDt1));
  CHECK(c == default_config());
  CHECK(parse_config(to_string(c)) == c);
  CHECK(parse_config("smv+rot_inv_stat2+smv_dt2") == c);
  CHECK_FALSE(parse_config("smv+no_znorm").znorm);

  CHECK_THROWS_AS(parse_config(""), ParseError);
  CHECK_THROWS_AS(parse_config("raw+rot_inv_sort"), ValidationError);
  CHECK_THROWS_AS(parse_config("smv+bogus"), ParseError);
  CHECK_THROWS_AS(parse_config("rot_inv_stat2+rot_inv_stat3"), ValidationError);
}

TEST_CASE("config lengths reproduce the published grid") {
  const auto grid = paper_grid();
  REQUIRE(grid.size() == 18);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    INFO(kPublished[i].config);
    CHECK(to_string(grid[i]) == kPublished[i].config);
    CHECK(config_length(grid[i]) == kPublished[i].n_feats);
    for (ModalityMask m : kAllMasks) CHECK(feature_schema(grid[i], m).size() == kPublished[i].n_feats);
  }
  CHECK(config_length(parse_config("smv")) == 140);
  CHECK(config_length(parse_config("raw")) == 420);
  CHECK(config_length(parse_config("rot_inv_sort+smv+smv_dt2")) == 694);
  CHECK(config_length(parse_config("smv+smv_dt1+smv_dt2+smv_integral")) == 560);
  CHECK(config_length(parse_config("rot_inv_stat3")) == 414);
}

TEST_CASE("aggregate") {
  std::mt19937_64 rng(1);
  const V fx = random_features(rng), fy = random_features(rng), fz = random_features(rng);
  CHECK(aggregate(fx, fy, fz, AggregationKind::Stat2).size() == 138);
  CHECK(aggregate(fx, fy, fz, AggregationKind::Stat3).size() == 207);
  CHECK(aggregate(fx, fy, fz, AggregationKind::Sort).size() == 207);
  CHECK_THROWS_AS(aggregate(V(69), fy, fz, AggregationKind::Stat2), SchemaError);

  const V same2 = aggregate(fx, fx, fx, AggregationKind::Stat2);
  for (std::size_t i = 0; i < kAggregatedFeatures; ++i) CHECK(same2[2 * i + 1] == 0.0);
  const V same3 = aggregate(fx, fx, fx, AggregationKind::Sort);
  for (std::size_t i = 0; i < kAggregatedFeatures; ++i) {
    CHECK(same3[3 * i] == same3[3 * i + 1]);
    CHECK(same3[3 * i + 1] == same3[3 * i + 2]);
  }
  for (double v : aggregate(fx, fx, fx, AggregationKind::Stat3)) CHECK(std::isfinite(v));

  // Hand-checked triple (1, 2, 6) in the first retained feature.
  V a(70, 0.0), b(70, 0.0), c(70, 0.0);
  a[0] = 1.0;
  b[0] = 2.0;
  c[0] = 6.0;
  const V s2 = aggregate(a, b, c, AggregationKind::Stat2);
  CHECK(s2[0] == doctest::Approx(3.0));
  CHECK(s2[1] == doctest::Approx(std::sqrt(14.0 / 3.0)));
  const V so = aggregate(c, a, b, AggregationKind::Sort);
  CHECK(so[0] == 1.0);
  CHECK(so[1] == 2.0);
  CHECK(so[2] == 6.0);
  const V s3 = aggregate(a, b, c, AggregationKind::Stat3);
  // m2 = 14/3, m3 = ((-2)^3 + (-1)^3 + 3^3) / 3 = 6
  CHECK(s3[2] == doctest::Approx(6.0 / std::pow(14.0 / 3.0, 1.5)));

  for (AggregationKind k : {AggregationKind::Stat2, AggregationKind::Stat3, AggregationKind::Sort}) {
    const V ref = aggregate(fx, fy, fz, k);
    std::array<const V*, 3> p = {&fx, &fy, &fz};
    std::sort(p.begin(), p.end());
    do {
      CHECK(aggregate(*p[0], *p[1], *p[2], k) == ref);
    } while (std::next_permutation(p.begin(), p.end()));
  }

  // The skew slot does not reach the output.
  V fx2 = fx;
  fx2[signal_skew_index()] = 1e6;
  CHECK(aggregate(fx2, fy, fz, AggregationKind::Stat3) == aggregate(fx, fy, fz, AggregationKind::Stat3));
}

TEST_CASE("feature schemas") {
  for (const auto& cfg : paper_grid()) {
    std::set<std::uint64_t> hashes;
    for (ModalityMask m : kAllMasks) {
      const auto s = feature_schema(cfg, m);
      std::set<std::string> names(s.names.begin(), s.names.end());
      CHECK(names.size() == s.size());
      CHECK(s.hash == schema_hash(s.names));
      hashes.insert(s.hash);
      const std::string missing(modality_tag(m.missing));
      for (const auto& n : s.names) REQUIRE(n.rfind(missing + "_", 0) != 0);
    }
    CHECK(hashes.size() == 3);
  }
  const auto s = feature_schema(parse_config("smv"), ModalityMask{Modality::Mag});
  CHECK(s.names.front() == "acc_smv_psd_band_0.1_0.5");
  CHECK(s.names[70].rfind("gyr_smv_", 0) == 0);
  // no_znorm changes values, not columns.
  CHECK(feature_schema(parse_config("smv+no_znorm"), ModalityMask{Modality::Mag}).names == s.names);
}

TEST_CASE("build_feature_vector") {
  const auto ws = synth_dataset({.n_windows = 1, .n_classes = 1, .seed = 3, .mask_modality = false});
  const auto dss = derive_all_signals(scale_units(ws[0]));
  const auto table = compute_signal_features(dss);
  for (const auto& cfg : paper_grid())
    for (ModalityMask m : kAllMasks) {
      const V v = build_feature_vector(table, cfg, m);
      CHECK(v.size() == config_length(cfg));
      CHECK(std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); }));
    }
  CHECK(build_feature_vector(dss, parse_config("smv"), kAllMasks[0]) ==
        build_feature_vector(table, parse_config("smv"), kAllMasks[0]));

  // Two modalities, all seven signals: 2 * 7 * 70 = 980.
  std::size_t total = 0;
  for (Modality m : ModalityMask{Modality::Gyr}.available())
    for (SignalKind s : kAllSignals) total += table.at(m, s).size();
  CHECK(total == 980);
}

TEST_CASE("aggregated and magnitude blocks ignore axis order and sign") {
  const auto ws = synth_dataset({.n_windows = 1, .n_classes = 1, .seed = 6, .mask_modality = false});
  const RawWindow base = scale_units(ws[0]);
  const ModalityMask mask{Modality::Mag};
  const auto cfg = parse_config("rot_inv_stat3+smv+smv_dt1+smv_dt2+smv_integral");
  const V ref = build_feature_vector(derive_all_signals(base), cfg, mask);

  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    std::array<int, 3> perm = {0, 1, 2};
    std::shuffle(perm.begin(), perm.end(), rng);
    const std::array<int, 3> sign = {rng() & 1 ? 1 : -1, rng() & 1 ? 1 : -1, rng() & 1 ? 1 : -1};
    RawWindow w = base;
    for (Modality m : mask.available()) testutil::permute_flip(w, m, perm, sign);
    const V got = build_feature_vector(derive_all_signals(w), cfg, mask);
    REQUIRE(got.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) REQUIRE(oracle::close(got[i], ref[i]));
  }
}
