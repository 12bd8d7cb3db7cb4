#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

namespace activelr {

inline constexpr std::size_t kDefaultIterationCap = 10000;
inline constexpr int kDefaultPort = 8787;
inline constexpr std::size_t kContourResolution = 101;

struct HttpResult {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

/// POST /api/run. Body fields (all but objective optional):
///   objective   cubic | multimodal | saddle | quadratic | mse_line
///   optimizer   sgd | adamw | radam | adabelief          (adamw)
///   active      bool                                      (false)
///   alpha0      (0, 10]                                   (1e-3)
///   alpha_low   (0, 1)                                    (0.9)
///   alpha_high  (0, 10]                                   (0.1)
///   mode        absolute | gain                           (absolute)
///   init_point  array matching the objective dimension   (objective default)
///   iterations  integer in [0, cap]                       (100)
///   seed        non-negative integer                      (default_seed)
/// Each iteration is one exact-gradient step and one adaptation epoch.
/// 400 for malformed JSON, unknown keys, wrong types or out-of-range values;
/// 422 when init_point has the wrong dimension. Divergence is reported with
/// "diverged": true and a truncated point list.
HttpResult handle_run_request(std::string_view body, std::size_t iteration_cap = kDefaultIterationCap,
                              std::uint64_t default_seed = 0);

/// GET /api/objectives: name, dim, default_init, suggested_bounds per objective.
std::string objectives_json();

struct ServiceOptions {
    std::size_t iteration_cap = kDefaultIterationCap;
    std::uint64_t default_seed = 0;
    std::string static_dir;   // optional directory served at "/"
    /// Called once per request with "METHOD path status"; may be empty.
    std::function<void(const std::string&)> access_log;
};

/// Threaded HTTP server for the endpoints above plus GET /healthz.
class TrajServer {
public:
    explicit TrajServer(ServiceOptions options = {});
    ~TrajServer();
    TrajServer(const TrajServer&) = delete;
    TrajServer& operator=(const TrajServer&) = delete;

    /// Binds without serving yet; port 0 picks a free port. Returns the bound
    /// port, or -1 when the address is unavailable.
    int bind(const std::string& host, int port);
    /// Serves until stop(); returns false if the server failed.
    bool listen_after_bind();
    void stop();
    /// Blocks until the listener is accepting connections.
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace activelr
