#pragma once

#include <complex>
#include <span>
#include <vector>

#include "shl/types.hpp"

namespace shl {

enum class SpectrumKind { Psd, Dct };

// One-sided amplitude/power representation. freqs ascending, amps >= 0.
struct Spectrum {
  std::vector<double> freqs;
  std::vector<double> amps;
  SpectrumKind kind = SpectrumKind::Psd;
};

struct WelchOptions {
  std::size_t segment_length = 256;
  std::size_t overlap = 128;
  bool detrend_constant = true;
};

// Welch PSD: periodic Hann window, per-segment mean removal, mean of the
// modified periodograms, one-sided density scaling. freqs[k] = k fs / nperseg.
// Inputs shorter than the segment length use a single full-length segment.
Spectrum welch_psd(std::span<const double> x, double fs = kSampleRate,
                   const WelchOptions& options = {});

// Orthonormal type-II DCT magnitudes for k = 1..N-1 (DC dropped),
// freqs[k-1] = k fs / (2N).
Spectrum dct_magnitudes(std::span<const double> x, double fs = kSampleRate);

// Boxcar periodogram with mean removal, one-sided density scaling.
Spectrum periodogram(std::span<const double> x, double fs = kSampleRate);

// Orthonormal DCT-II coefficients including the DC term.
std::vector<double> dct2_orthonormal(std::span<const double> x);

// Forward real FFT, bins 0..n/2.
std::vector<std::complex<double>> rfft(std::span<const double> x);

}  // namespace shl
