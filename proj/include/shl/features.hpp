#pragma once

// Per-signal feature extraction: 70 values per signal.
//
//   spectral (x2: Welch PSD and DCT magnitudes of the z-normalized signal)
//     17 band energies, centroid, bandwidth, top-2 amplitude ratio,
//     amplitude max/std/skew, peak frequency, mean/std/skew of the top-5
//     frequencies                                                   2 x 27
//   PSD spectral entropy                                                 1
//   autocorrelation: |mean|, skew, std, prominent frequency, zero
//     crossing rate, slope sign change rate, differential and
//     spectral entropy                                                   8
//   signal as-is: differential entropy, mean crossing rate, skew,
//     kurtosis, Hjorth mobility and complexity, Katz fractal dimension   7
//
// Degenerate inputs (constant or all-zero signals and spectra) map to fixed
// values so that feature matrices never contain NaN or Inf.

#include <array>
#include <span>
#include <string>
#include <vector>

#include "shl/spectral.hpp"
#include "shl/types.hpp"

namespace shl {

inline constexpr std::size_t kFeaturesPerSignal = 70;
inline constexpr std::size_t kSpectralFeatures = 55;
inline constexpr std::size_t kNumBands = 17;
inline constexpr std::size_t kShapeFeatures = 10;
inline constexpr std::size_t kAcfFeatures = 8;
inline constexpr std::size_t kTimeFeatures = 7;

struct FrequencyBand {
  double lo;
  double hi;
};

inline constexpr std::array<FrequencyBand, kNumBands> kFrequencyBands = {{
    {0.1, 0.5}, {0.5, 1.0}, {1.0, 1.5}, {1.5, 2.0}, {2.0, 2.5}, {2.5, 3.0},
    {3.0, 4.0}, {4.0, 5.0}, {5.0, 6.0}, {6.0, 8.0}, {8.0, 12.0}, {12.0, 18.0},
    {18.0, 24.0}, {24.0, 28.0}, {28.0, 32.0}, {32.0, 40.0}, {40.0, 50.0},
}};

enum class FeatureDomain { Spectral, Time };

struct FeatureDescriptor {
  std::string name;
  FeatureDomain domain;
  bool sign_invariant;
};

// The fixed, ordered list of 70 per-signal features.
const std::vector<FeatureDescriptor>& feature_catalog();

// Position of the only sign-sensitive feature (time-domain skew).
std::size_t signal_skew_index();

struct FeatureOptions {
  // Z-normalize before the PSD and DCT. Turning this off is an ablation.
  bool znorm = true;
};

// Population z-score; all zeros when std < 1e-12.
std::vector<double> znorm(std::span<const double> x);

// Energy per band, bands half-open [lo, hi) except the last one, [40, 50].
std::array<double, kNumBands> band_energies(const Spectrum& s);

// centroid, bandwidth, 2nd/1st amplitude ratio, amp max, amp std, amp skew,
// peak frequency, top-5 frequency mean, std and skew.
std::array<double, kShapeFeatures> spectral_shape(const Spectrum& s);

// Shannon entropy (bits) of the normalized amplitudes.
double spectral_entropy(const Spectrum& s);

// Normalized autocorrelation at lags 1..max_lag.
std::vector<double> acf(std::span<const double> x, std::size_t max_lag = 250);

std::array<double, kAcfFeatures> acf_features(std::span<const double> r, double fs = kSampleRate);

// Vasicek spacing estimator with m = floor(sqrt(n)). Constant input -> 0.
double differential_entropy(std::span<const double> x);

// Population moment skew / excess kurtosis, 0 when m2 < 1e-24.
double moment_skew(std::span<const double> x);
double excess_kurtosis(std::span<const double> x);

// Sign changes of (x - mean) divided by n - 1.
double mean_crossing_rate(std::span<const double> x);

struct Hjorth {
  double mobility;
  double complexity;
};
Hjorth hjorth(std::span<const double> x);

double katz_fd(std::span<const double> x);

std::array<double, kTimeFeatures> time_features(std::span<const double> x);

std::vector<double> extract_signal_features(std::span<const double> x,
                                            const FeatureOptions& options = {});

}  // namespace shl
