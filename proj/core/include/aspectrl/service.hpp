#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include "aspectrl/reward.hpp"

namespace aspectrl::service {

inline constexpr int kSchemaVersion = 1;

struct ServiceOptions {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks an ephemeral port
    int worker_threads = 8;
    std::size_t max_body_bytes = 8 * 1024 * 1024;
    RewardConfig reward;
    FormatConfig format;
};

/// Status code plus JSON body. Handlers are pure with respect to the
/// request body: identical bodies produce identical results. Timing is
/// reported out of band (X-Timing-Ms response header) so bodies stay
/// deterministic.
struct HandlerResult {
    int status = 200;
    std::string body;
};

/// POST /score: per-item reward breakdowns and correctness flags.
HandlerResult handle_score(const std::string& request_body, const ServiceOptions& defaults);

/// POST /filter: per-group correctness flags and retained indices.
HandlerResult handle_filter(const std::string& request_body, const ServiceOptions& defaults);

/// GET /health: build/version plus the effective default config.
std::string health_body(const ServiceOptions& defaults);

/// Stateless JSON-over-HTTP scoring service with a bounded worker pool.
class RewardServer {
  public:
    explicit RewardServer(ServiceOptions options);
    ~RewardServer();
    RewardServer(const RewardServer&) = delete;
    RewardServer& operator=(const RewardServer&) = delete;

    /// Binds and serves on a background thread. Returns the bound port.
    /// Throws std::runtime_error when the address cannot be bound.
    int start();

    /// Blocking serve loop for the CLI `serve` verb.
    void run();

    void stop();
    int port() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace aspectrl::service
