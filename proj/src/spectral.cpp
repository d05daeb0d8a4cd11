#include "shl/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>

namespace shl {

namespace {

// FFTW planning is not thread-safe; executing an existing plan on new arrays
// is. Plans are created once per size under a lock and kept for the process
// lifetime.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan r2c(int n) { return get(r2c_, n, [n] {
      std::vector<double> in(static_cast<std::size_t>(n));
      std::vector<std::complex<double>> out(static_cast<std::size_t>(n / 2 + 1));
      return fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                  FFTW_ESTIMATE | FFTW_UNALIGNED);
    });
  }

  fftw_plan dct2(int n) { return get(dct2_, n, [n] {
      std::vector<double> in(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n));
      return fftw_plan_r2r_1d(n, in.data(), out.data(), FFTW_REDFT10,
                              FFTW_ESTIMATE | FFTW_UNALIGNED);
    });
  }

  ~PlanCache() {
    for (auto& [n, p] : r2c_) fftw_destroy_plan(p);
    for (auto& [n, p] : dct2_) fftw_destroy_plan(p);
  }

 private:
  template <typename Make>
  fftw_plan get(std::map<int, fftw_plan>& cache, int n, Make&& make) {
    std::lock_guard lock(mutex_);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    fftw_plan p = make();
    cache.emplace(n, p);
    return p;
  }

  std::mutex mutex_;
  std::map<int, fftw_plan> r2c_;
  std::map<int, fftw_plan> dct2_;
};

std::vector<double> hann_periodic(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

// |X_k|^2 * scale for k = 0..n/2, doubled except DC (and Nyquist for even n).
void accumulate_onesided(std::span<const double> segment, double scale, std::vector<double>& acc) {
  auto bins = rfft(segment);
  const std::size_t n = segment.size();
  for (std::size_t k = 0; k < bins.size(); ++k) {
    double p = std::norm(bins[k]) * scale;
    const bool unpaired = k == 0 || (n % 2 == 0 && k == n / 2);
    acc[k] += unpaired ? p : 2.0 * p;
  }
}

}  // namespace

std::vector<std::complex<double>> rfft(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  std::vector<std::complex<double>> out(x.size() / 2 + 1);
  if (n == 0) return {};
  // FFTW does not modify the input of an out-of-place r2c transform.
  fftw_execute_dft_r2c(PlanCache::instance().r2c(n), const_cast<double*>(x.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

std::vector<double> dct2_orthonormal(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  if (n == 0) return out;
  std::vector<double> in(x.begin(), x.end());
  fftw_execute_r2r(PlanCache::instance().dct2(static_cast<int>(n)), in.data(), out.data());
  // FFTW's REDFT10 is unnormalized: Y_k = 2 sum x_n cos(pi (2n+1) k / 2N).
  const double nd = static_cast<double>(n);
  out[0] *= std::sqrt(1.0 / (4.0 * nd));
  for (std::size_t k = 1; k < n; ++k) out[k] *= std::sqrt(1.0 / (2.0 * nd));
  return out;
}

Spectrum welch_psd(std::span<const double> x, double fs, const WelchOptions& options) {
  Spectrum s;
  s.kind = SpectrumKind::Psd;
  if (x.empty()) return s;

  std::size_t nperseg = options.segment_length;
  std::size_t overlap = options.overlap;
  if (x.size() < nperseg) {
    nperseg = x.size();
    overlap = std::min(overlap, nperseg / 2);
  }
  const std::size_t step = nperseg - overlap;
  const auto window = hann_periodic(nperseg);
  const double wsum2 = std::inner_product(window.begin(), window.end(), window.begin(), 0.0);
  const double scale = 1.0 / (fs * wsum2);

  const std::size_t n_bins = nperseg / 2 + 1;
  s.amps.assign(n_bins, 0.0);
  s.freqs.resize(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k)
    s.freqs[k] = static_cast<double>(k) * fs / static_cast<double>(nperseg);

  std::vector<double> seg(nperseg);
  std::size_t n_segments = 0;
  for (std::size_t start = 0; start + nperseg <= x.size(); start += step) {
    double mean = 0.0;
    if (options.detrend_constant) {
      for (std::size_t i = 0; i < nperseg; ++i) mean += x[start + i];
      mean /= static_cast<double>(nperseg);
    }
    for (std::size_t i = 0; i < nperseg; ++i) seg[i] = (x[start + i] - mean) * window[i];
    accumulate_onesided(seg, scale, s.amps);
    ++n_segments;
  }
  for (double& a : s.amps) a /= static_cast<double>(n_segments);
  return s;
}

Spectrum dct_magnitudes(std::span<const double> x, double fs) {
  Spectrum s;
  s.kind = SpectrumKind::Dct;
  const std::size_t n = x.size();
  if (n < 2) return s;
  auto coeffs = dct2_orthonormal(x);
  s.freqs.resize(n - 1);
  s.amps.resize(n - 1);
  for (std::size_t k = 1; k < n; ++k) {
    s.freqs[k - 1] = static_cast<double>(k) * fs / (2.0 * static_cast<double>(n));
    s.amps[k - 1] = std::abs(coeffs[k]);
  }
  return s;
}

Spectrum periodogram(std::span<const double> x, double fs) {
  Spectrum s;
  s.kind = SpectrumKind::Psd;
  const std::size_t n = x.size();
  if (n == 0) return s;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  std::vector<double> centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = x[i] - mean;
  s.amps.assign(n / 2 + 1, 0.0);
  accumulate_onesided(centered, 1.0 / (fs * static_cast<double>(n)), s.amps);
  s.freqs.resize(s.amps.size());
  for (std::size_t k = 0; k < s.freqs.size(); ++k)
    s.freqs[k] = static_cast<double>(k) * fs / static_cast<double>(n);
  return s;
}

}  // namespace shl
