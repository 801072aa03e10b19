#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fairtext/ingestion.h"

namespace testing {

inline std::string fixture(const std::string& name) { return std::string(FAIRTEXT_FIXTURES) + "/" + name; }
inline std::string data_file(const std::string& name) { return std::string(FAIRTEXT_DATA) + "/" + name; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("fairtext-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline fairtext::Document doc(std::string text, std::string id = "d") {
  return fairtext::Document{std::move(id), std::move(text), std::nullopt};
}

inline fairtext::Corpus corpus_of(const std::vector<std::string>& texts) {
  fairtext::Corpus c;
  for (std::size_t i = 0; i < texts.size(); ++i) c.documents.push_back(doc(texts[i], "d" + std::to_string(i)));
  return c;
}

}  // namespace testing
