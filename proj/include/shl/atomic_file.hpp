#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>

#include "shl/types.hpp"

namespace shl {

// Writes through a sibling temporary file and renames it into place, so a
// failed write never leaves a partial file at `path`.
template <typename Fn>
void write_file_atomic(const std::filesystem::path& path, Fn&& write, bool binary = false) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!os) throw DataError("cannot open for writing: " + tmp.string());
    try {
      write(os);
    } catch (...) {
      os.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw;
    }
    os.flush();
    if (!os) {
      os.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw DataError("write failed: " + path.string());
    }
  }
  fs::rename(tmp, path);
}

}  // namespace shl
