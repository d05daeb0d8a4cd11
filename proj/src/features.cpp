#include "shl/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace shl {

namespace {

constexpr double kDegenerateM2 = 1e-24;

bool is_constant(std::span<const double> x) {
  if (x.empty()) return true;
  auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return *lo == *hi;
}

double mean_of(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Central moments m2, m3, m4 around the sample mean.
struct CentralMoments {
  double mean = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
};

CentralMoments central_moments(std::span<const double> x) {
  CentralMoments c;
  if (x.empty()) return c;
  c.mean = mean_of(x);
  for (double v : x) {
    const double d = v - c.mean;
    const double d2 = d * d;
    c.m2 += d2;
    c.m3 += d2 * d;
    c.m4 += d2 * d2;
  }
  const auto n = static_cast<double>(x.size());
  c.m2 /= n;
  c.m3 /= n;
  c.m4 /= n;
  return c;
}

double population_std(std::span<const double> x) {
  if (is_constant(x)) return 0.0;
  return std::sqrt(central_moments(x).m2);
}

std::string format_bound(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::vector<FeatureDescriptor> build_catalog() {
  std::vector<FeatureDescriptor> c;
  for (const char* prefix : {"psd_", "dct_"}) {
    const std::string p(prefix);
    for (const auto& b : kFrequencyBands)
      c.push_back({p + "band_" + format_bound(b.lo) + "_" + format_bound(b.hi),
                   FeatureDomain::Spectral, true});
    for (const char* name : {"centroid", "bandwidth", "ratio_top2", "amp_max", "amp_std", "amp_skew",
                             "top_freq", "top5_freq_mean", "top5_freq_std", "top5_freq_skew"})
      c.push_back({p + name, FeatureDomain::Spectral, true});
  }
  c.push_back({"psd_spectral_entropy", FeatureDomain::Spectral, true});
  for (const char* name : {"acf_abs_mean", "acf_skew", "acf_std", "acf_prominent_freq", "acf_zcr",
                           "acf_ssc", "acf_diff_entropy", "acf_spectral_entropy"})
    c.push_back({name, FeatureDomain::Time, true});
  c.push_back({"diff_entropy", FeatureDomain::Time, true});
  c.push_back({"mean_crossing_rate", FeatureDomain::Time, true});
  c.push_back({"skew", FeatureDomain::Time, false});
  c.push_back({"kurtosis", FeatureDomain::Time, true});
  c.push_back({"hjorth_mobility", FeatureDomain::Time, true});
  c.push_back({"hjorth_complexity", FeatureDomain::Time, true});
  c.push_back({"katz_fd", FeatureDomain::Time, true});

  static_assert(2 * (kNumBands + 2 + 1 + 3 + 1 + 3) + 1 + (3 + 1 + 2 + 2) + (1 + 1 + 2 + 2 + 1) ==
                kFeaturesPerSignal);
  if (c.size() != kFeaturesPerSignal) throw std::logic_error("feature catalog size mismatch");
  return c;
}

}  // namespace

const std::vector<FeatureDescriptor>& feature_catalog() {
  static const std::vector<FeatureDescriptor> catalog = build_catalog();
  return catalog;
}

std::size_t signal_skew_index() {
  static const std::size_t idx = [] {
    const auto& c = feature_catalog();
    auto it = std::find_if(c.begin(), c.end(), [](const auto& d) { return !d.sign_invariant; });
    return static_cast<std::size_t>(it - c.begin());
  }();
  return idx;
}

std::vector<double> znorm(std::span<const double> x) {
  std::vector<double> out(x.size(), 0.0);
  if (is_constant(x)) return out;
  const auto c = central_moments(x);
  const double sd = std::sqrt(c.m2);
  if (sd < 1e-12) return out;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - c.mean) / sd;
  return out;
}

std::array<double, kNumBands> band_energies(const Spectrum& s) {
  std::array<double, kNumBands> e{};
  for (std::size_t k = 0; k < s.freqs.size(); ++k) {
    const double f = s.freqs[k];
    for (std::size_t b = 0; b < kNumBands; ++b) {
      const bool last = b + 1 == kNumBands;
      if (f >= kFrequencyBands[b].lo && (f < kFrequencyBands[b].hi || (last && f <= kFrequencyBands[b].hi))) {
        e[b] += s.amps[k];
        break;
      }
    }
  }
  return e;
}

std::array<double, kShapeFeatures> spectral_shape(const Spectrum& s) {
  std::array<double, kShapeFeatures> out{};
  const std::size_t n = s.amps.size();
  const double total = std::accumulate(s.amps.begin(), s.amps.end(), 0.0);
  if (n == 0 || total <= 0.0) return out;

  double centroid = 0.0;
  for (std::size_t k = 0; k < n; ++k) centroid += s.freqs[k] * s.amps[k];
  centroid /= total;
  double spread = 0.0;
  for (std::size_t k = 0; k < n; ++k) spread += s.amps[k] * (s.freqs[k] - centroid) * (s.freqs[k] - centroid);

  // Indices by decreasing amplitude; equal amplitudes keep the lower index first.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s.amps[a] > s.amps[b]; });

  const double top = s.amps[order[0]];
  const double second = n > 1 ? s.amps[order[1]] : 0.0;

  const std::size_t n_top = std::min<std::size_t>(5, n);
  std::vector<double> top_freqs(n_top);
  for (std::size_t i = 0; i < n_top; ++i) top_freqs[i] = s.freqs[order[i]];

  out[0] = centroid;
  out[1] = std::sqrt(spread / total);
  out[2] = second / top;
  out[3] = top;
  out[4] = population_std(s.amps);
  out[5] = moment_skew(s.amps);
  out[6] = s.freqs[order[0]];
  out[7] = mean_of(top_freqs);
  out[8] = population_std(top_freqs);
  out[9] = moment_skew(top_freqs);
  return out;
}

double spectral_entropy(const Spectrum& s) {
  const double total = std::accumulate(s.amps.begin(), s.amps.end(), 0.0);
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double a : s.amps) {
    const double p = a / total;
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

std::vector<double> acf(std::span<const double> x, std::size_t max_lag) {
  const std::size_t n = x.size();
  const std::size_t lags = n == 0 ? 0 : std::min(max_lag, n - 1);
  std::vector<double> r(lags, 0.0);
  if (is_constant(x)) return r;
  const double mu = mean_of(x);
  std::vector<double> d(n);
  for (std::size_t t = 0; t < n; ++t) d[t] = x[t] - mu;
  const double denom = std::inner_product(d.begin(), d.end(), d.begin(), 0.0);
  if (denom <= 0.0) return r;
  for (std::size_t k = 1; k <= lags; ++k) {
    double num = 0.0;
    for (std::size_t t = 0; t + k < n; ++t) num += d[t] * d[t + k];
    r[k - 1] = num / denom;
  }
  return r;
}

std::array<double, kAcfFeatures> acf_features(std::span<const double> r, double fs) {
  std::array<double, kAcfFeatures> out{};
  const std::size_t n = r.size();
  if (n == 0 || std::all_of(r.begin(), r.end(), [](double v) { return v == 0.0; })) return out;

  double abs_sum = 0.0;
  for (double v : r) abs_sum += std::abs(v);
  out[0] = abs_sum / static_cast<double>(n);
  out[1] = moment_skew(r);
  out[2] = population_std(r);

  // Skip the trivial peak at small lags: search after the first zero crossing.
  std::size_t start = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (r[i - 1] * r[i] < 0.0) {
      start = i;
      break;
    }
  const auto peak = static_cast<std::size_t>(std::max_element(r.begin() + static_cast<std::ptrdiff_t>(start), r.end()) - r.begin());
  out[3] = fs / static_cast<double>(peak + 1);

  std::size_t zc = 0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (r[i] * r[i + 1] < 0.0) ++zc;
  out[4] = n > 1 ? static_cast<double>(zc) / static_cast<double>(n - 1) : 0.0;

  std::size_t ssc = 0;
  for (std::size_t i = 1; i + 1 < n; ++i)
    if ((r[i] - r[i - 1]) * (r[i] - r[i + 1]) > 0.0) ++ssc;
  out[5] = n > 2 ? static_cast<double>(ssc) / static_cast<double>(n - 2) : 0.0;

  out[6] = differential_entropy(r);
  out[7] = spectral_entropy(periodogram(r, fs));
  return out;
}

double differential_entropy(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2 || is_constant(x)) return 0.0;
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const auto m = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  const double factor = static_cast<double>(n) / (2.0 * static_cast<double>(m));
  double h = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double hi = s[std::min(i + m, n - 1)];
    const double lo = s[i >= m ? i - m : 0];
    h += std::log(factor * std::max(hi - lo, 1e-12));
  }
  return h / static_cast<double>(n);
}

double moment_skew(std::span<const double> x) {
  if (is_constant(x)) return 0.0;
  const auto c = central_moments(x);
  if (c.m2 < kDegenerateM2) return 0.0;
  return c.m3 / std::pow(c.m2, 1.5);
}

double excess_kurtosis(std::span<const double> x) {
  if (is_constant(x)) return 0.0;
  const auto c = central_moments(x);
  if (c.m2 < kDegenerateM2) return 0.0;
  return c.m4 / (c.m2 * c.m2) - 3.0;
}

double mean_crossing_rate(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  const double mu = mean_of(x);
  std::size_t crossings = 0;
  for (std::size_t t = 0; t + 1 < n; ++t)
    if ((x[t] - mu) * (x[t + 1] - mu) < 0.0) ++crossings;
  return static_cast<double>(crossings) / static_cast<double>(n - 1);
}

Hjorth hjorth(std::span<const double> x) {
  if (x.size() < 3) return {0.0, 0.0};
  std::vector<double> dx(x.size() - 1), ddx(x.size() - 2);
  for (std::size_t t = 0; t + 1 < x.size(); ++t) dx[t] = x[t + 1] - x[t];
  for (std::size_t t = 0; t + 1 < dx.size(); ++t) ddx[t] = dx[t + 1] - dx[t];
  const double var_x = is_constant(x) ? 0.0 : central_moments(x).m2;
  const double var_dx = is_constant(dx) ? 0.0 : central_moments(dx).m2;
  const double var_ddx = is_constant(ddx) ? 0.0 : central_moments(ddx).m2;
  if (var_x < kDegenerateM2) return {0.0, 0.0};
  const double mobility = std::sqrt(var_dx / var_x);
  if (var_dx < kDegenerateM2 || mobility <= 0.0) return {mobility, 0.0};
  return {mobility, std::sqrt(var_ddx / var_dx) / mobility};
}

double katz_fd(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return 1.0;
  double length = 0.0;
  double extent = 0.0;
  for (std::size_t t = 0; t + 1 < n; ++t) length += std::abs(x[t + 1] - x[t]);
  for (std::size_t t = 1; t < n; ++t) extent = std::max(extent, std::abs(x[t] - x[0]));
  if (length <= 0.0 || extent <= 0.0) return 1.0;
  const double ln = std::log10(static_cast<double>(n - 1));
  const double denom = ln + std::log10(extent / length);
  if (std::abs(denom) < 1e-12) return 1.0;
  return ln / denom;
}

std::array<double, kTimeFeatures> time_features(std::span<const double> x) {
  const auto h = hjorth(x);
  return {differential_entropy(x), mean_crossing_rate(x), moment_skew(x), excess_kurtosis(x),
          h.mobility, h.complexity, katz_fd(x)};
}

std::vector<double> extract_signal_features(std::span<const double> x, const FeatureOptions& options) {
  std::vector<double> out;
  out.reserve(kFeaturesPerSignal);
  const std::vector<double> z = options.znorm ? znorm(x) : std::vector<double>(x.begin(), x.end());

  const Spectrum psd = welch_psd(z);
  const Spectrum dct = dct_magnitudes(z);
  for (const Spectrum* s : {&psd, &dct}) {
    const auto bands = band_energies(*s);
    const auto shape = spectral_shape(*s);
    out.insert(out.end(), bands.begin(), bands.end());
    out.insert(out.end(), shape.begin(), shape.end());
  }
  out.push_back(spectral_entropy(psd));

  const auto acf_f = acf_features(acf(x));
  out.insert(out.end(), acf_f.begin(), acf_f.end());
  const auto time_f = time_features(x);
  out.insert(out.end(), time_f.begin(), time_f.end());
  return out;
}

}  // namespace shl
