/* Copyright 2026 The ragcheck Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ragcheck {

// Shortest round-trip decimal representation; locale-free and byte-stable
// across runs.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

inline std::string csv_escape(std::string_view field) {
  const bool needs_quotes = field.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

inline std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += csv_escape(fields[i]);
  }
  out.push_back('\n');
  return out;
}

// Write-to-temp then rename, so consumers never see a partial file.
inline void atomic_write(const std::filesystem::path& path, std::string_view content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("short write: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// Exclusive lock on an output directory. Creation fails when another process
// already owns it; the lock file is removed on destruction.
class DirLock {
public:
  explicit DirLock(const std::filesystem::path& dir) : lock_path_(dir / ".ragcheck.lock") {
    std::filesystem::create_directories(dir);
    FILE* f = std::fopen(lock_path_.c_str(), "wx");
    if (f == nullptr) {
      throw std::runtime_error("output directory is locked by another run: " +
                               lock_path_.string());
    }
    std::fclose(f);
  }
  ~DirLock() {
    std::error_code ec;
    std::filesystem::remove(lock_path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

private:
  std::filesystem::path lock_path_;
};

}  // namespace ragcheck
