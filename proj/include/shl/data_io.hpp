#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "shl/types.hpp"

namespace shl {

// Row-major windows x samples matrix as read from one channel file.
struct ChannelMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
};

using ChannelKey = std::pair<Modality, std::size_t>;  // (modality, axis)

// Reads one whitespace-separated text file with one window per line. Blank
// lines are skipped. Throws ParseError (with line number) on a token that is
// not a finite real, ShapeError when a line has the wrong number of values.
ChannelMatrix load_channel_file(const std::filesystem::path& path, std::size_t samples_per_window);

// Most frequent id in a row of per-sample labels; ties go to the lowest id.
ClassId majority_label(std::span<const double> sample_labels);

// Builds one RawWindow per row. Channels absent from the map are zero-filled.
// `locations` may be empty (every window gets Location::Unknown).
std::vector<RawWindow> assemble_windows(const std::map<ChannelKey, ChannelMatrix>& channels,
                                        const ChannelMatrix& labels,
                                        std::span<const Location> locations,
                                        std::int64_t first_window_id = 0);

// Returns the unique all-zero modality, or nullopt when every modality carries
// data (the unmasked training set). Two or more all-zero modalities throw
// AmbiguityError.
std::optional<ModalityMask> detect_missing_modality(const RawWindow& w);

std::vector<RawWindow> filter_locations(std::span<const RawWindow> windows,
                                        const std::set<Location>& excluded);

// Loads a dataset from disk. Accepted layouts:
//  * a window cache file written by write_window_cache;
//  * a directory with <Mod>_<axis>.txt channel files, Label.txt and an optional
//    Location.txt (one location name or id per window);
//  * a directory with Hand/, Torso/, Hips/, Bag/ subdirectories, each in the
//    flat layout above (the location is taken from the subdirectory name).
std::vector<RawWindow> load_dataset(const std::filesystem::path& path);

// Writes `windows` in the flat text layout accepted by load_dataset.
void write_dataset_dir(const std::filesystem::path& dir, std::span<const RawWindow> windows);

// Window cache: "SHLW", u32 version, u32 window count, u32 channel count,
// channel names, u32 samples per channel, then per window i64 id, i32 label,
// u8 location and channel-major float32 samples. All little-endian.
void write_window_cache(const std::filesystem::path& path, std::span<const RawWindow> windows);
std::vector<RawWindow> read_window_cache(const std::filesystem::path& path);

std::filesystem::path channel_file_name(Modality m, std::size_t axis);

// --- synthetic data --------------------------------------------------------

struct SynthOptions {
  std::size_t n_windows = 600;
  int n_classes = 3;
  std::uint64_t seed = 0;
  bool mask_modality = true;
};

// Frequency (Hz) of the oscillation that dominates the SMV of `modality` for
// synthetic class index `class_index` (0-based).
double synth_class_frequency(Modality modality, int class_index);

// Deterministic, class-balanced synthetic windows in raw SHL units. Class k
// (label k+1) oscillates at synth_class_frequency(m, k) along a randomly
// rotated direction with random amplitude, so SMV spectra separate classes
// while raw axes carry arbitrary orientation. Locations cycle through the four
// phone positions. When mask_modality is set, one uniformly drawn modality
// per window is zero-filled.
std::vector<RawWindow> synth_dataset(const SynthOptions& options);

}  // namespace shl
