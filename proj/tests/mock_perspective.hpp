#pragma once

// In-process stand-in for a Perspective-style scoring endpoint. Records
// every request (arrival time, text, key) and can be told to answer the
// first few requests with 429.

#include <atomic>
#include <chrono>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

namespace testing_util {

class MockPerspective {
 public:
  using Clock = std::chrono::steady_clock;

  struct Request {
    Clock::time_point at;
    std::string text;
    std::string key;
  };

  explicit MockPerspective(std::function<double(const std::string&)> scorer = [](const std::string&) { return 0.42; })
      : scorer_(std::move(scorer)) {
    server_.Post("/v1alpha1/comments:analyze", [this](const httplib::Request& req, httplib::Response& res) {
      const auto body = nlohmann::json::parse(req.body);
      const std::string text = body.at("comment").at("text");
      {
        std::lock_guard lock(mutex_);
        log_.push_back({Clock::now(), text, req.get_param_value("key")});
      }
      if (throttle_remaining_.fetch_sub(1) > 0) {
        res.status = 429;
        res.set_content(R"({"error":"rate limited"})", "application/json");
        return;
      }
      nlohmann::json out;
      out["attributeScores"]["TOXICITY"]["summaryScore"]["value"] = scorer_(text);
      res.set_content(out.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockPerspective() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1alpha1/comments:analyze"; }

  void throttle_next(int n) { throttle_remaining_ = n; }

  std::vector<Request> requests() const {
    std::lock_guard lock(mutex_);
    return log_;
  }
  std::size_t request_count() const {
    std::lock_guard lock(mutex_);
    return log_.size();
  }
  void clear() {
    std::lock_guard lock(mutex_);
    log_.clear();
  }

 private:
  std::function<double(const std::string&)> scorer_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> throttle_remaining_{0};
  mutable std::mutex mutex_;
  std::vector<Request> log_;
};

}  // namespace testing_util
