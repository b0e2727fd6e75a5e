#pragma once

// In-process chat-completion stub for provider tests.

#include <httplib.h>

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

class StubProvider {
 public:
  // answer(prompt) -> model text. status_for(call index) -> HTTP status
  // (200 sends the answer, anything else an error body).
  explicit StubProvider(std::function<std::string(const std::string&)> answer,
                        std::function<int(std::size_t)> status_for = [](std::size_t) { return 200; })
      : answer_(std::move(answer)), status_for_(std::move(status_for)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const std::size_t call = calls_++;
      const auto body = nlohmann::json::parse(req.body);
      {
        std::lock_guard lock(mutex_);
        models_.push_back(body.at("model").get<std::string>());
        auth_.push_back(req.get_header_value("Authorization"));
      }
      const int status = status_for_(call);
      if (status != 200) {
        res.status = status;
        res.set_content(R"({"error":"stub"})", "application/json");
        return;
      }
      const std::string prompt = body.at("messages").at(0).at("content").get<std::string>();
      const nlohmann::json reply{{"id", "stub-" + std::to_string(call)},
                                 {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", answer_(prompt)}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    server_.Post("/raw", [this](const httplib::Request&, httplib::Response& res) {
      ++calls_;
      res.set_content("not json at all", "text/plain");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubProvider() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path = "/v1/chat/completions") const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }
  std::size_t calls() const { return calls_.load(); }
  std::vector<std::string> models() const {
    std::lock_guard lock(mutex_);
    return models_;
  }
  std::vector<std::string> auth_headers() const {
    std::lock_guard lock(mutex_);
    return auth_;
  }

 private:
  std::function<std::string(const std::string&)> answer_;
  std::function<int(std::size_t)> status_for_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::size_t> calls_{0};
  mutable std::mutex mutex_;
  std::vector<std::string> models_;
  std::vector<std::string> auth_;
};
