#pragma once

// Batch reward endpoint for external trainers.
//
//   POST /v1/rewards   {"batch": [item, ...]} -> {"results": [result, ...]}
//   GET  /v1/health    {"status": "ok", "version": ...}
//   GET  /v1/metrics   {"requests_served", "outputs_scored", "degenerate_rollouts"}
//
// Item and result layouts are documented in records.hpp. Errors answer
// {"error": {"status": code, "message": text}}: 400 malformed body, 413 batch
// over the output limit, 422 n_train larger than its rollout.

#include <atomic>
#include <cstdint>
#include <string>
#include <string_view>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "ttrl/config.hpp"
#include "ttrl/records.hpp"
#include "ttrl/version.hpp"

namespace ttrl {

struct HttpReply {
  int status = 200;
  std::string body;
};

inline HttpReply error_reply(int status, const std::string& message) {
  Json j;
  j["error"]["status"] = status;
  j["error"]["message"] = message;
  return {status, j.dump()};
}

class RewardService {
 public:
  explicit RewardService(std::size_t max_batch_outputs = kDefaultMaxBatchOutputs)
      : max_batch_outputs_(max_batch_outputs) {}

  HttpReply handle_rewards(std::string_view body) {
    Json request;
    try {
      request = Json::parse(body);
    } catch (const Json::parse_error& e) {
      return error_reply(400, std::string("body: invalid JSON: ") + e.what());
    }
    if (!request.is_object()) return error_reply(400, "body: must be an object");
    const auto batch = request.find("batch");
    if (batch == request.end() || !batch->is_array()) return error_reply(400, "batch: required array");
    if (batch->empty()) return error_reply(400, "batch: must be non-empty");

    std::vector<RolloutItem> items;
    items.reserve(batch->size());
    std::size_t total_outputs = 0;
    try {
      for (std::size_t i = 0; i < batch->size(); ++i) {
        items.push_back(parse_rollout_item((*batch)[i], "batch[" + std::to_string(i) + "]"));
        total_outputs += items.back().outputs.size();
      }
    } catch (const RecordError& e) {
      return error_reply(e.status(), e.what());
    }
    if (total_outputs > max_batch_outputs_) {
      return error_reply(413, "batch: " + std::to_string(total_outputs) + " outputs exceeds the limit of " +
                                  std::to_string(max_batch_outputs_));
    }

    Json response;
    auto& results = response["results"] = Json::array();
    std::uint64_t degenerate = 0;
    for (const auto& item : items) {
      auto scored = score_rollout_item(item);
      degenerate += scored.degenerate ? 1 : 0;
      results.push_back(std::move(scored.json));
    }
    requests_served_.fetch_add(1, std::memory_order_relaxed);
    outputs_scored_.fetch_add(total_outputs, std::memory_order_relaxed);
    degenerate_rollouts_.fetch_add(degenerate, std::memory_order_relaxed);
    return {200, response.dump()};
  }

  HttpReply handle_health() const {
    Json j;
    j["status"] = "ok";
    j["version"] = std::string(kVersion);
    return {200, j.dump()};
  }

  HttpReply handle_metrics_summary() const {
    Json j;
    j["requests_served"] = requests_served_.load(std::memory_order_relaxed);
    j["outputs_scored"] = outputs_scored_.load(std::memory_order_relaxed);
    j["degenerate_rollouts"] = degenerate_rollouts_.load(std::memory_order_relaxed);
    return {200, j.dump()};
  }

  /// Registers the /v1 routes; the service must outlive the server.
  void mount(httplib::Server& server) {
    // Small JSON replies on keep-alive connections otherwise stall on Nagle.
    server.set_tcp_nodelay(true);
    auto send = [](httplib::Response& res, const HttpReply& reply) {
      res.status = reply.status;
      res.set_content(reply.body, "application/json");
    };
    server.Post("/v1/rewards", [this, send](const httplib::Request& req, httplib::Response& res) {
      const auto reply = handle_rewards(req.body);
      spdlog::debug("POST /v1/rewards -> {} ({} bytes in)", reply.status, req.body.size());
      send(res, reply);
    });
    server.Get("/v1/health", [this, send](const httplib::Request&, httplib::Response& res) {
      send(res, handle_health());
    });
    server.Get("/v1/metrics", [this, send](const httplib::Request&, httplib::Response& res) {
      send(res, handle_metrics_summary());
    });
  }

 private:
  std::size_t max_batch_outputs_;
  std::atomic<std::uint64_t> requests_served_{0};
  std::atomic<std::uint64_t> outputs_scored_{0};
  std::atomic<std::uint64_t> degenerate_rollouts_{0};
};

}  // namespace ttrl
