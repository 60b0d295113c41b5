#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ctu/log.hpp"
#include "ctu/timeline.hpp"

namespace testing_util {

// Silences the JSON log sink for the lifetime of the object.
class QuietLogs {
 public:
  QuietLogs() : prev_(ctu::log::set_sink(nullptr)) {}
  ~QuietLogs() { ctu::log::set_sink(prev_); }

 private:
  ctu::log::Sink prev_;
};

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("ctu_test_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Base instant for hand-built fixtures: 2020-01-01T00:00:00Z.
inline constexpr ctu::EpochSeconds kT0 = 1'577'836'800;

inline ctu::Timeline make_timeline(const std::string& user, const std::vector<ctu::EpochSeconds>& stamps,
                                   const std::vector<double>& scores = {}) {
  ctu::Timeline t;
  t.user_id = user;
  for (std::size_t i = 0; i < stamps.size(); ++i) {
    ctu::Event e;
    char id[16];
    std::snprintf(id, sizeof id, "e%06zu", i);
    e.event_id = id;
    e.timestamp = stamps[i];
    if (i < scores.size()) e.toxicity = scores[i];
    t.events.push_back(std::move(e));
  }
  std::sort(t.events.begin(), t.events.end(), ctu::event_order);
  return t;
}

}  // namespace testing_util
