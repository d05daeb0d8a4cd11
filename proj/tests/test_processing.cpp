#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "shl/data_io.hpp"
#include "shl/processing.hpp"
#include "test_util.hpp"

using namespace shl;
using V = std::vector<double>;

TEST_CASE("scale_units") {
  RawWindow w;
  w.channel(Modality::Acc, 0)[0] = 9.81;
  w.channel(Modality::Gyr, 1)[3] = 2.0 * std::numbers::pi;
  w.channel(Modality::Mag, 2)[5] = 0.0;
  w.channel(Modality::Mag, 0)[1] = 250.0;
  const RawWindow s = scale_units(w);
  CHECK(s.channel(Modality::Acc, 0)[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.channel(Modality::Gyr, 1)[3] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.channel(Modality::Mag, 2)[5] == 0.0);
  CHECK(s.channel(Modality::Mag, 0)[1] == doctest::Approx(2.5));
}

TEST_CASE("smv") {
  CHECK(smv(V{3}, V{4}, V{0})[0] == 5.0);
  CHECK(smv(V{0}, V{0}, V{0})[0] == 0.0);
  CHECK(smv(V{1}, V{1}, V{1})[0] == doctest::Approx(1.7320508075688772).epsilon(1e-15));
  CHECK_THROWS_AS(smv(V{1, 2}, V{1}, V{1, 2}), ShapeError);
}

TEST_CASE("gradient1") {
  CHECK(gradient1(V{0, 1, 2, 3}) == V{1, 1, 1, 1});
  CHECK(gradient1(V{4, 4, 4}) == V{0, 0, 0});
  CHECK(gradient1(V{0, 0, 4, 0, 0}) == V{0, 2, 0, -2, 0});
  CHECK_THROWS_AS(gradient1(V{1}), ShapeError);
}

TEST_CASE("gradient2") {
  for (double v : gradient2(V{1, 3, 5, 7, 9, 11})) CHECK(v == 0.0);
  for (double v : gradient2(V{2, 2, 2, 2})) CHECK(v == 0.0);
  // t^2 at 0..4, by hand: g1 = [1,2,4,6,7], g2 = [1,1.5,2,1.5,1].
  const V g2 = gradient2(V{0, 1, 4, 9, 16});
  CHECK(g2 == V{1, 1.5, 2, 1.5, 1});
  // Over a longer quadratic the interior settles at the second derivative.
  V q(20);
  for (std::size_t t = 0; t < q.size(); ++t) q[t] = 0.5 * static_cast<double>(t * t);
  const V g2q = gradient2(q);
  for (std::size_t t = 2; t + 2 < q.size(); ++t) CHECK(g2q[t] == doctest::Approx(1.0));
}

TEST_CASE("integral") {
  CHECK(integral(V{1, 1, 1, 1}) == V{0, 1, 2, 3});
  CHECK(integral(V{0, 2}) == V{0, 1});
  CHECK(integral(V{0, 1, 2, 3}) == V{0, 0.5, 2, 4.5});
  CHECK_THROWS_AS(integral(V{2}), ShapeError);
}

TEST_CASE("kernels match brute-force oracles on random signals") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const V x = oracle::random_signal(rng);
    const V g1 = gradient1(x), g1o = oracle::gradient1(x);
    const V g2 = gradient2(x), g2o = oracle::gradient1(oracle::gradient1(x));
    const V in = integral(x), ino = oracle::integral(x);
    for (std::size_t t = 0; t < x.size(); ++t) {
      REQUIRE(g1[t] == g1o[t]);
      REQUIRE(oracle::close(g2[t], g2o[t]));
      REQUIRE(oracle::close(in[t], ino[t]));
    }
    for (std::size_t t = 2; t + 2 < x.size(); ++t)
      REQUIRE(oracle::close(g2[t], (x[t + 2] - 2 * x[t] + x[t - 2]) / 4.0));
    // Differentiating the integral gives the [1,2,1]/4 smoothed signal.
    const V back = gradient1(in);
    for (std::size_t t = 1; t + 1 < x.size(); ++t)
      REQUIRE(oracle::close(back[t], (x[t - 1] + 2 * x[t] + x[t + 1]) / 4.0));
  }
}

TEST_CASE("derive_signals") {
  const auto ws = synth_dataset({.n_windows = 3, .n_classes = 3, .seed = 4, .mask_modality = false});
  const RawWindow s = scale_units(ws[0]);
  for (ModalityMask mask : kAllMasks) {
    const auto dss = derive_signals(s, mask);
    CHECK(dss.signal_count() == 14);
    CHECK_FALSE(dss.modalities[index_of(mask.missing)].has_value());
    for (Modality m : mask.available()) {
      const auto& sig = dss.at(m);
      for (const auto& v : sig) CHECK(v.size() == kWindowLength);
      for (std::size_t k = 3; k < kSignalsPerModality; ++k)
        for (double v : sig[k]) REQUIRE(v >= 0.0);
      for (std::size_t t = 0; t < kWindowLength; ++t) {
        const double x = sig[0][t], y = sig[1][t], z = sig[2][t];
        REQUIRE(oracle::close(sig[3][t] * sig[3][t], x * x + y * y + z * z, 1e-12));
      }
    }
  }
  CHECK(derive_all_signals(s).signal_count() == 21);

  RawWindow c;
  for (std::size_t a = 0; a < 3; ++a)
    for (double& v : c.channel(Modality::Acc, a)) v = 2.0 + static_cast<double>(a);
  const auto cs = derive_modality(c, Modality::Acc);
  for (double v : cs[static_cast<std::size_t>(SignalKind::SmvDt1)]) CHECK(v == 0.0);
  for (double v : cs[static_cast<std::size_t>(SignalKind::SmvDt2)]) CHECK(v == 0.0);

  // A zero-masked modality gives all-zero derived signals.
  const auto zs = derive_modality(RawWindow{}, Modality::Gyr);
  for (const auto& sig : zs)
    for (double v : sig) REQUIRE(v == 0.0);
}

TEST_CASE("magnitude signals are rotation invariant") {
  const auto ws = synth_dataset({.n_windows = 1, .n_classes = 1, .seed = 8, .mask_modality = false});
  const RawWindow base = scale_units(ws[0]);
  const auto ref = derive_modality(base, Modality::Acc);
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    RawWindow r = base;
    testutil::rotate(r, Modality::Acc, testutil::random_orthogonal(rng));
    const auto got = derive_modality(r, Modality::Acc);
    for (std::size_t k = 3; k < kSignalsPerModality; ++k)
      for (std::size_t t = 0; t < kWindowLength; ++t) REQUIRE(oracle::close(got[k][t], ref[k][t]));
  }
}
