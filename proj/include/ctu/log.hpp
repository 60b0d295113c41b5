#pragma once

// Machine-readable logging: one JSON object per line. The sink defaults to
// stderr and can be swapped (tests capture it, the CLI may silence it).

#include <chrono>
#include <cstdio>
#include <functional>
#include <mutex>
#include <string>
#include <utility>

#include <json.hpp>

namespace ctu::log {

using Sink = std::function<void(const nlohmann::json&)>;

namespace detail {

inline std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

inline Sink& sink() {
  static Sink s = [](const nlohmann::json& record) {
    const std::string line = record.dump() + "\n";
    std::fputs(line.c_str(), stderr);
  };
  return s;
}

}  // namespace detail

inline Sink set_sink(Sink s) {
  std::lock_guard lock(detail::sink_mutex());
  return std::exchange(detail::sink(), std::move(s));
}

inline void emit(nlohmann::json record) {
  std::lock_guard lock(detail::sink_mutex());
  if (detail::sink()) detail::sink()(record);
}

inline void warn(const std::string& stage, const std::string& message, nlohmann::json extra = {}) {
  nlohmann::json rec = {{"level", "warn"}, {"stage", stage}, {"msg", message}};
  if (extra.is_object()) rec.update(extra);
  emit(std::move(rec));
}

inline void info(const std::string& stage, const std::string& message, nlohmann::json extra = {}) {
  nlohmann::json rec = {{"level", "info"}, {"stage", stage}, {"msg", message}};
  if (extra.is_object()) rec.update(extra);
  emit(std::move(rec));
}

// RAII timer that logs the stage duration when it goes out of scope.
class StageTimer {
 public:
  explicit StageTimer(std::string stage) : stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

  void set(const std::string& key, nlohmann::json value) { extra_[key] = std::move(value); }

  ~StageTimer() {
    const auto elapsed = std::chrono::steady_clock::now() - start_;
    nlohmann::json rec = {{"level", "info"},
                          {"stage", stage_},
                          {"msg", "stage finished"},
                          {"duration_ms", std::chrono::duration<double, std::milli>(elapsed).count()}};
    if (extra_.is_object()) rec.update(extra_);
    emit(std::move(rec));
  }

 private:
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
  nlohmann::json extra_ = nlohmann::json::object();
};

}  // namespace ctu::log
