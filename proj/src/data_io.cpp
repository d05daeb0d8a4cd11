#include "shl/data_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "shl/atomic_file.hpp"
#include "shl/binary_io.hpp"

namespace shl {
namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, 8> kLabelNames = {"Still", "Walk",  "Run",   "Bike",
                                                         "Car",   "Bus",   "Train", "Subway"};
constexpr std::array<std::string_view, 5> kLocationNames = {"Hand", "Torso", "Hips", "Bag",
                                                            "Unknown"};
constexpr std::array<char, 3> kAxisNames = {'x', 'y', 'z'};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

constexpr std::uint32_t kCacheVersion = 1;

}  // namespace

// --- enum helpers ----------------------------------------------------------

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::Acc: return "Acc";
    case Modality::Gyr: return "Gyr";
    case Modality::Mag: return "Mag";
  }
  return "?";
}

std::string_view modality_tag(Modality m) {
  switch (m) {
    case Modality::Acc: return "acc";
    case Modality::Gyr: return "gyr";
    case Modality::Mag: return "mag";
  }
  return "?";
}

Modality parse_modality(std::string_view s) {
  for (Modality m : kAllModalities)
    if (iequals(s, modality_name(m))) return m;
  throw ParseError("unknown modality: " + std::string(s));
}

std::array<Modality, 2> ModalityMask::available() const {
  std::array<Modality, 2> out{};
  std::size_t k = 0;
  for (Modality m : kAllModalities)
    if (m != missing) out[k++] = m;
  return out;
}

std::string_view label_name(ClassId id) {
  if (!is_valid_label(id)) throw ValidationError("label id out of range: " + std::to_string(id));
  return kLabelNames[static_cast<std::size_t>(id - kMinClassId)];
}

ClassId label_id(std::string_view name) {
  for (std::size_t i = 0; i < kLabelNames.size(); ++i)
    if (iequals(name, kLabelNames[i])) return static_cast<ClassId>(i) + kMinClassId;
  throw ParseError("unknown label name: " + std::string(name));
}

std::string_view location_name(Location loc) {
  return kLocationNames[static_cast<std::size_t>(loc)];
}

Location parse_location(std::string_view s) {
  s = trim(s);
  for (std::size_t i = 0; i < kLocationNames.size(); ++i)
    if (iequals(s, kLocationNames[i])) return static_cast<Location>(i);
  int id = -1;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), id);
  if (ec == std::errc{} && ptr == s.data() + s.size() && id >= 0 &&
      id < static_cast<int>(kLocationNames.size()))
    return static_cast<Location>(id);
  throw ParseError("unknown location: " + std::string(s));
}

fs::path channel_file_name(Modality m, std::size_t axis) {
  std::string name(modality_name(m));
  name += '_';
  name += kAxisNames.at(axis);
  name += ".txt";
  return name;
}

// --- text loading ----------------------------------------------------------

ChannelMatrix load_channel_file(const fs::path& path, std::size_t samples_per_window) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path.string());

  ChannelMatrix m;
  m.cols = samples_per_window;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest = trim(line);
    if (rest.empty()) continue;
    std::size_t count = 0;
    while (!rest.empty()) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), v);
      if (ec != std::errc{} || !std::isfinite(v) ||
          (ptr != rest.data() + rest.size() && !std::isspace(static_cast<unsigned char>(*ptr))))
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed value");
      ++count;
      if (count <= samples_per_window) m.values.push_back(v);
      rest = trim(rest.substr(static_cast<std::size_t>(ptr - rest.data())));
    }
    if (count != samples_per_window)
      throw ShapeError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(samples_per_window) + " values, got " +
                       std::to_string(count));
    ++m.rows;
  }
  return m;
}

ClassId majority_label(std::span<const double> sample_labels) {
  std::array<std::size_t, kMaxClassId + 1> counts{};
  for (double v : sample_labels) {
    auto id = static_cast<ClassId>(std::lround(v));
    if (static_cast<double>(id) != v || !is_valid_label(id))
      throw ValidationError("invalid sample label: " + std::to_string(v));
    ++counts[static_cast<std::size_t>(id)];
  }
  ClassId best = kMinClassId;
  for (ClassId c = kMinClassId + 1; c <= kMaxClassId; ++c)
    if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(best)]) best = c;
  return best;
}

std::vector<RawWindow> assemble_windows(const std::map<ChannelKey, ChannelMatrix>& channels,
                                        const ChannelMatrix& labels,
                                        std::span<const Location> locations,
                                        std::int64_t first_window_id) {
  const std::size_t n = labels.rows;
  for (const auto& [key, mat] : channels) {
    if (mat.rows != n)
      throw ShapeError("channel " + channel_file_name(key.first, key.second).string() + " has " +
                       std::to_string(mat.rows) + " windows, labels have " + std::to_string(n));
    if (mat.cols != kWindowLength)
      throw ShapeError("channel " + channel_file_name(key.first, key.second).string() +
                       " has wrong window length");
  }
  if (!locations.empty() && locations.size() != n)
    throw ShapeError("locations have " + std::to_string(locations.size()) +
                     " entries, labels have " + std::to_string(n));

  std::vector<RawWindow> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    RawWindow& w = out[i];
    for (const auto& [key, mat] : channels) {
      auto src = mat.row(i);
      std::copy(src.begin(), src.end(), w.channel(key.first, key.second).begin());
    }
    w.label = majority_label(labels.row(i));
    w.location = locations.empty() ? Location::Unknown : locations[i];
    w.window_id = first_window_id + static_cast<std::int64_t>(i);
  }
  return out;
}

std::optional<ModalityMask> detect_missing_modality(const RawWindow& w) {
  std::optional<ModalityMask> found;
  std::size_t zero_count = 0;
  for (Modality m : kAllModalities) {
    auto values = w.modality(m);
    if (std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; })) {
      ++zero_count;
      found = ModalityMask{m};
    }
  }
  if (zero_count > 1)
    throw AmbiguityError("window " + std::to_string(w.window_id) + " has " +
                         std::to_string(zero_count) + " all-zero modalities");
  return found;
}

std::vector<RawWindow> filter_locations(std::span<const RawWindow> windows,
                                        const std::set<Location>& excluded) {
  std::vector<RawWindow> out;
  out.reserve(windows.size());
  for (const auto& w : windows)
    if (!excluded.contains(w.location)) out.push_back(w);
  return out;
}

// --- dataset directories ---------------------------------------------------

namespace {

std::vector<Location> load_locations(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::vector<Location> out;
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (!t.empty()) out.push_back(parse_location(t));
  }
  return out;
}

std::vector<RawWindow> load_flat_dir(const fs::path& dir, std::optional<Location> location,
                                     std::int64_t first_id) {
  const fs::path label_path = dir / "Label.txt";
  if (!fs::exists(label_path)) throw DataError("missing labels file: " + label_path.string());
  ChannelMatrix labels = load_channel_file(label_path, kWindowLength);

  std::map<ChannelKey, ChannelMatrix> channels;
  for (Modality m : kAllModalities)
    for (std::size_t a = 0; a < kNumAxes; ++a) {
      fs::path p = dir / channel_file_name(m, a);
      if (fs::exists(p)) channels.emplace(ChannelKey{m, a}, load_channel_file(p, kWindowLength));
    }
  if (channels.empty()) throw DataError("no channel files found in " + dir.string());

  std::vector<Location> locs;
  if (location) {
    locs.assign(labels.rows, *location);
  } else if (fs::exists(dir / "Location.txt")) {
    locs = load_locations(dir / "Location.txt");
  }
  return assemble_windows(channels, labels, locs, first_id);
}

}  // namespace

std::vector<RawWindow> load_dataset(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("data path does not exist: " + path.string());
  if (fs::is_regular_file(path)) return read_window_cache(path);

  if (fs::exists(path / "Label.txt")) return load_flat_dir(path, std::nullopt, 0);

  std::vector<RawWindow> all;
  for (Location loc : {Location::Hand, Location::Torso, Location::Hips, Location::Bag}) {
    fs::path sub = path / std::string(location_name(loc));
    if (!fs::is_directory(sub)) continue;
    auto part = load_flat_dir(sub, loc, static_cast<std::int64_t>(all.size()));
    all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  if (all.empty()) throw DataError("missing labels file: " + (path / "Label.txt").string());
  return all;
}

void write_dataset_dir(const fs::path& dir, std::span<const RawWindow> windows) {
  fs::create_directories(dir);
  auto write_rows = [&](const fs::path& p, auto&& row_fn) {
    write_file_atomic(p, [&](std::ostream& os) {
      os << std::setprecision(17);
      for (const auto& w : windows) row_fn(os, w);
    });
  };
  for (Modality m : kAllModalities)
    for (std::size_t a = 0; a < kNumAxes; ++a)
      write_rows(dir / channel_file_name(m, a), [&](std::ostream& os, const RawWindow& w) {
        auto ch = w.channel(m, a);
        for (std::size_t t = 0; t < ch.size(); ++t) os << (t ? " " : "") << ch[t];
        os << '\n';
      });
  write_rows(dir / "Label.txt", [](std::ostream& os, const RawWindow& w) {
    for (std::size_t t = 0; t < kWindowLength; ++t) os << (t ? " " : "") << w.label;
    os << '\n';
  });
  write_rows(dir / "Location.txt", [](std::ostream& os, const RawWindow& w) {
    os << location_name(w.location) << '\n';
  });
}

// --- binary cache ----------------------------------------------------------

void write_window_cache(const fs::path& path, std::span<const RawWindow> windows) {
  write_file_atomic(
      path,
      [&](std::ostream& os) {
        bin::put_magic(os, "SHLW");
        bin::put<std::uint32_t>(os, kCacheVersion);
        bin::put<std::uint32_t>(os, static_cast<std::uint32_t>(windows.size()));
        bin::put<std::uint32_t>(os, kNumModalities * kNumAxes);
        for (Modality m : kAllModalities)
          for (std::size_t a = 0; a < kNumAxes; ++a)
            bin::put_string(os, fs::path(channel_file_name(m, a)).stem().string());
        bin::put<std::uint32_t>(os, kWindowLength);
        for (const auto& w : windows) {
          bin::put<std::int64_t>(os, w.window_id);
          bin::put<std::int32_t>(os, w.label);
          bin::put<std::uint8_t>(os, static_cast<std::uint8_t>(w.location));
          for (double v : w.samples) bin::put<float>(os, static_cast<float>(v));
        }
      },
      true);
}

std::vector<RawWindow> read_window_cache(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open file: " + path.string());
  bin::expect_magic(is, "SHLW", "window cache");
  if (auto v = bin::get<std::uint32_t>(is); v != kCacheVersion)
    throw ParseError("unsupported window cache version " + std::to_string(v));
  const auto n = bin::get<std::uint32_t>(is);
  const auto n_channels = bin::get<std::uint32_t>(is);
  if (n_channels != kNumModalities * kNumAxes) throw ShapeError("window cache channel count mismatch");
  for (Modality m : kAllModalities)
    for (std::size_t a = 0; a < kNumAxes; ++a)
      if (bin::get_string(is, 64) != fs::path(channel_file_name(m, a)).stem().string())
        throw ShapeError("window cache channel list mismatch");
  if (bin::get<std::uint32_t>(is) != kWindowLength) throw ShapeError("window cache length mismatch");

  std::vector<RawWindow> out(n);
  for (auto& w : out) {
    w.window_id = bin::get<std::int64_t>(is);
    w.label = bin::get<std::int32_t>(is);
    if (!is_valid_label(w.label)) throw ValidationError("window cache holds invalid label");
    auto loc = bin::get<std::uint8_t>(is);
    if (loc > static_cast<std::uint8_t>(Location::Unknown))
      throw ValidationError("window cache holds invalid location");
    w.location = static_cast<Location>(loc);
    for (double& v : w.samples) v = static_cast<double>(bin::get<float>(is));
  }
  return out;
}

}  // namespace shl
