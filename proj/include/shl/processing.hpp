#pragma once

// Unit scaling and the seven per-modality signals fed to feature extraction:
// the three scaled axes plus four magnitude signals.
//
// The derivative and integral transforms are applied per axis before taking
// the magnitude. Both are linear maps that act identically on every axis, so
// for any orthogonal R, T(R v) = R T(v) and |R T(v)| = |T(v)|. All four
// magnitude signals are therefore invariant to sensor orientation.

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "shl/types.hpp"

namespace shl {

enum class SignalKind : std::uint8_t { X = 0, Y, Z, Smv, SmvDt1, SmvDt2, SmvIntegral };

inline constexpr std::size_t kSignalsPerModality = 7;
inline constexpr std::array<SignalKind, kSignalsPerModality> kAllSignals = {
    SignalKind::X,   SignalKind::Y,      SignalKind::Z,          SignalKind::Smv,
    SignalKind::SmvDt1, SignalKind::SmvDt2, SignalKind::SmvIntegral};

std::string_view signal_name(SignalKind s);

inline constexpr double kAccScale = 9.81;     // m/s^2 -> g
inline constexpr double kGyrScale = 2.0 * 3.14159265358979323846;  // rad/s -> Hz
inline constexpr double kMagScale = 100.0;    // uT -> Gauss

RawWindow scale_units(const RawWindow& w);

std::vector<double> smv(std::span<const double> x, std::span<const double> y,
                        std::span<const double> z);

// Central differences inside, one-sided first differences at both ends.
std::vector<double> gradient1(std::span<const double> x);
std::vector<double> gradient2(std::span<const double> x);

// Cumulative trapezoid with unit spacing and a leading zero (same length).
std::vector<double> integral(std::span<const double> x);

using ModalitySignals = std::array<std::vector<double>, kSignalsPerModality>;

struct DerivedSignalSet {
  std::array<std::optional<ModalitySignals>, kNumModalities> modalities;

  const ModalitySignals& at(Modality m) const;
  std::size_t signal_count() const;
};

ModalitySignals derive_modality(const RawWindow& scaled, Modality m);

// Signals for the two modalities available under `mask`.
DerivedSignalSet derive_signals(const RawWindow& scaled, ModalityMask mask);

// Signals for all three modalities (training windows, where every mask is
// simulated from the same data).
DerivedSignalSet derive_all_signals(const RawWindow& scaled);

}  // namespace shl
