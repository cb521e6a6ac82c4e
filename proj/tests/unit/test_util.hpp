#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "relic/corpus.hpp"

namespace relic::testing {

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("relic-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline ExampleTriplet triplet(std::string id, std::string lang, std::string query,
                              std::string response, Polarity p) {
  return {std::move(id), std::move(lang), std::move(query), std::move(response), p};
}

}  // namespace relic::testing
