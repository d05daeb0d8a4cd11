#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace shl {

// Fixed window geometry: 5 s at 100 Hz, three sensors with three axes each.
inline constexpr std::size_t kWindowLength = 500;
inline constexpr double kSampleRate = 100.0;
inline constexpr std::size_t kNumModalities = 3;
inline constexpr std::size_t kNumAxes = 3;

// --- errors ----------------------------------------------------------------

// Anything caused by the input data rather than by a bug. The CLI maps this
// family to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
};

class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

class AmbiguityError : public DataError {
 public:
  using DataError::DataError;
};

class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

// --- modalities ------------------------------------------------------------

enum class Modality : std::uint8_t { Acc = 0, Gyr = 1, Mag = 2 };

inline constexpr std::array<Modality, kNumModalities> kAllModalities = {
    Modality::Acc, Modality::Gyr, Modality::Mag};

inline constexpr std::size_t index_of(Modality m) {
  return static_cast<std::size_t>(m);
}

// "Acc", "Gyr", "Mag" (SHL file prefixes).
std::string_view modality_name(Modality m);
// Lowercase form used in feature column names.
std::string_view modality_tag(Modality m);
Modality parse_modality(std::string_view s);

// The modality that is zero-filled in a window. Each mask selects its own
// model and its own feature schema built from the two remaining sensors.
struct ModalityMask {
  Modality missing = Modality::Acc;

  // Present modalities in canonical (Acc, Gyr, Mag) order.
  std::array<Modality, 2> available() const;

  friend bool operator==(ModalityMask, ModalityMask) = default;
};

inline constexpr std::array<ModalityMask, kNumModalities> kAllMasks = {
    ModalityMask{Modality::Acc}, ModalityMask{Modality::Gyr},
    ModalityMask{Modality::Mag}};

// --- labels and locations --------------------------------------------------

// SHL class ids: Still=1, Walk=2, Run=3, Bike=4, Car=5, Bus=6, Train=7,
// Subway=8.
using ClassId = int;
inline constexpr ClassId kMinClassId = 1;
inline constexpr ClassId kMaxClassId = 8;

std::string_view label_name(ClassId id);
ClassId label_id(std::string_view name);
inline constexpr bool is_valid_label(ClassId id) {
  return id >= kMinClassId && id <= kMaxClassId;
}

enum class Location : std::uint8_t { Hand = 0, Torso = 1, Hips = 2, Bag = 3, Unknown = 4 };

std::string_view location_name(Location loc);
Location parse_location(std::string_view s);

// --- raw window ------------------------------------------------------------

// One 5 s window. Samples are stored modality-major, then axis, then time.
struct RawWindow {
  std::vector<double> samples = std::vector<double>(kNumModalities * kNumAxes * kWindowLength, 0.0);
  ClassId label = kMinClassId;
  Location location = Location::Unknown;
  std::int64_t window_id = 0;

  std::span<double> channel(Modality m, std::size_t axis) {
    return {samples.data() + (index_of(m) * kNumAxes + axis) * kWindowLength, kWindowLength};
  }
  std::span<const double> channel(Modality m, std::size_t axis) const {
    return {samples.data() + (index_of(m) * kNumAxes + axis) * kWindowLength, kWindowLength};
  }
  std::span<double> modality(Modality m) {
    return {samples.data() + index_of(m) * kNumAxes * kWindowLength, kNumAxes * kWindowLength};
  }
  std::span<const double> modality(Modality m) const {
    return {samples.data() + index_of(m) * kNumAxes * kWindowLength, kNumAxes * kWindowLength};
  }
};

}  // namespace shl
