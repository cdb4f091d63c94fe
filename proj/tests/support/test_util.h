#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "partmatch/error.h"

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("partmatch_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

template <class Fn>
partmatch::ErrorCode error_code_of(Fn&& fn) {
  try {
    fn();
  } catch (const partmatch::Error& e) {
    return e.code();
  }
  throw std::runtime_error("expected a partmatch::Error");
}

}  // namespace testing

#define CHECK_ERROR_CODE(expr, code) CHECK(testing::error_code_of([&] { (void)(expr); }) == (code))
