#include "shl/processing.hpp"

#include <cmath>

namespace shl {

std::string_view signal_name(SignalKind s) {
  switch (s) {
    case SignalKind::X: return "x";
    case SignalKind::Y: return "y";
    case SignalKind::Z: return "z";
    case SignalKind::Smv: return "smv";
    case SignalKind::SmvDt1: return "smv_dt1";
    case SignalKind::SmvDt2: return "smv_dt2";
    case SignalKind::SmvIntegral: return "smv_integral";
  }
  return "?";
}

RawWindow scale_units(const RawWindow& w) {
  RawWindow out = w;
  const std::array<double, kNumModalities> scale = {kAccScale, kGyrScale, kMagScale};
  for (Modality m : kAllModalities)
    for (double& v : out.modality(m)) v /= scale[index_of(m)];
  return out;
}

std::vector<double> smv(std::span<const double> x, std::span<const double> y,
                        std::span<const double> z) {
  if (x.size() != y.size() || x.size() != z.size())
    throw ShapeError("smv: axis lengths differ");
  std::vector<double> out(x.size());
  for (std::size_t t = 0; t < x.size(); ++t)
    out[t] = std::sqrt(x[t] * x[t] + y[t] * y[t] + z[t] * z[t]);
  return out;
}

std::vector<double> gradient1(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw ShapeError("gradient1: need at least 2 samples");
  std::vector<double> out(n);
  out[0] = x[1] - x[0];
  out[n - 1] = x[n - 1] - x[n - 2];
  for (std::size_t t = 1; t + 1 < n; ++t) out[t] = (x[t + 1] - x[t - 1]) / 2.0;
  return out;
}

std::vector<double> gradient2(std::span<const double> x) { return gradient1(gradient1(x)); }

std::vector<double> integral(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw ShapeError("integral: need at least 2 samples");
  std::vector<double> out(n);
  out[0] = 0.0;
  for (std::size_t t = 1; t < n; ++t) out[t] = out[t - 1] + (x[t] + x[t - 1]) / 2.0;
  return out;
}

const ModalitySignals& DerivedSignalSet::at(Modality m) const {
  const auto& s = modalities[index_of(m)];
  if (!s) throw SchemaError("derived signals missing for modality " + std::string(modality_name(m)));
  return *s;
}

std::size_t DerivedSignalSet::signal_count() const {
  std::size_t n = 0;
  for (const auto& s : modalities)
    if (s) n += s->size();
  return n;
}

ModalitySignals derive_modality(const RawWindow& scaled, Modality m) {
  auto x = scaled.channel(m, 0);
  auto y = scaled.channel(m, 1);
  auto z = scaled.channel(m, 2);

  auto transformed_smv = [&](auto&& transform) {
    auto tx = transform(x);
    auto ty = transform(y);
    auto tz = transform(z);
    return smv(tx, ty, tz);
  };

  ModalitySignals out;
  out[0].assign(x.begin(), x.end());
  out[1].assign(y.begin(), y.end());
  out[2].assign(z.begin(), z.end());
  out[3] = smv(x, y, z);
  out[4] = transformed_smv([](std::span<const double> a) { return gradient1(a); });
  out[5] = transformed_smv([](std::span<const double> a) { return gradient2(a); });
  out[6] = transformed_smv([](std::span<const double> a) { return integral(a); });
  return out;
}

DerivedSignalSet derive_signals(const RawWindow& scaled, ModalityMask mask) {
  DerivedSignalSet out;
  for (Modality m : mask.available()) out.modalities[index_of(m)] = derive_modality(scaled, m);
  return out;
}

DerivedSignalSet derive_all_signals(const RawWindow& scaled) {
  DerivedSignalSet out;
  for (Modality m : kAllModalities) out.modalities[index_of(m)] = derive_modality(scaled, m);
  return out;
}

}  // namespace shl
