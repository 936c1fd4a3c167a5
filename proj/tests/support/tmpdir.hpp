#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>

namespace ragcheck::testing {

// Unique scratch directory under the system temp dir, removed on
// destruction.
class TmpDir {
public:
  TmpDir() {
    static std::atomic<uint64_t> counter{0};
    const uint64_t id = counter.fetch_add(1);
    path_ = std::filesystem::temp_directory_path() /
            ("ragcheck-test-" + std::to_string(::getpid()) + "-" + std::to_string(id));
    std::filesystem::create_directories(path_);
  }
  ~TmpDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TmpDir(const TmpDir&) = delete;
  TmpDir& operator=(const TmpDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace ragcheck::testing
