#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "shl/data_io.hpp"

namespace shl {

namespace {

// Distribution helpers are written out so that the generated data does not
// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do u1 = uniform(); while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::array<double, 3> unit_vector() {
    std::array<double, 3> v{};
    double n = 0.0;
    do {
      for (auto& c : v) c = normal();
      n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    } while (n < 1e-6);
    for (auto& c : v) c /= n;
    return v;
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct ModalityProfile {
  double offset_lo, offset_hi;  // magnitude of the static component
  double amp_lo, amp_hi;        // oscillation amplitude
  double noise;                 // per-axis white noise std
};

// Raw SHL units: m/s^2, rad/s, uT.
constexpr std::array<ModalityProfile, kNumModalities> kProfiles = {{
    {9.81, 9.81, 1.0, 4.0, 0.3},
    {0.6, 1.2, 0.2, 0.5, 0.02},
    {30.0, 50.0, 3.0, 8.0, 0.5},
}};

}  // namespace

double synth_class_frequency(Modality modality, int class_index) {
  switch (modality) {
    case Modality::Acc: return 1.0 + 1.5 * class_index;
    case Modality::Gyr: return 0.7 + 1.3 * class_index;
    case Modality::Mag: return 0.5 + 1.1 * class_index;
  }
  return 0.0;
}

std::vector<RawWindow> synth_dataset(const SynthOptions& options) {
  if (options.n_classes < 1 || options.n_classes > kMaxClassId)
    throw ValidationError("synth_dataset: n_classes must be in [1, 8]");

  Rng rng(options.seed);
  std::vector<RawWindow> out(options.n_windows);
  constexpr std::array<Location, 4> kLocations = {Location::Hand, Location::Torso, Location::Hips,
                                                  Location::Bag};
  const auto n_classes = static_cast<std::size_t>(options.n_classes);

  for (std::size_t i = 0; i < options.n_windows; ++i) {
    RawWindow& w = out[i];
    const int cls = static_cast<int>(i % n_classes);
    w.label = cls + kMinClassId;
    w.location = kLocations[(i / n_classes) % kLocations.size()];
    w.window_id = static_cast<std::int64_t>(i);

    for (Modality m : kAllModalities) {
      const auto& prof = kProfiles[index_of(m)];
      const double freq = synth_class_frequency(m, cls);
      const double offset = rng.uniform(prof.offset_lo, prof.offset_hi);
      const double amp = rng.uniform(prof.amp_lo, prof.amp_hi);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const auto dir = rng.unit_vector();
      for (std::size_t t = 0; t < kWindowLength; ++t) {
        const double s =
            offset + amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(t) / kSampleRate + phase);
        for (std::size_t a = 0; a < kNumAxes; ++a)
          w.channel(m, a)[t] = s * dir[a] + prof.noise * rng.normal();
      }
    }

    if (options.mask_modality) {
      const auto missing = kAllModalities[rng.below(kNumModalities)];
      for (double& v : w.modality(missing)) v = 0.0;
    }
  }
  return out;
}

}  // namespace shl
