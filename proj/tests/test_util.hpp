#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "rover/rng.hpp"

namespace rovertest {

/// Fresh scratch directory under the system temp root; removed on destruction.
struct TmpDir {
  std::filesystem::path path;

  explicit TmpDir(const std::string& tag) {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("rover_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TmpDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
  std::string sub(const std::string& name) const {
    std::filesystem::create_directories(path / name);
    return (path / name).string();
  }
};

inline std::string read_file(const std::string& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

}  // namespace rovertest
