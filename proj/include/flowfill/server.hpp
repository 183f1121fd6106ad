#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>

#include "flowfill/engine.hpp"

namespace httplib {
class Server;
}

namespace flowfill {

enum class LogLevel { error, warn, info, debug };
LogLevel parse_log_level(std::string_view text);

struct ServerConfig {
    std::string bind_address = "127.0.0.1:5055";
    std::string flow_path;
    bool strict_templates = false;
    int drain_timeout_ms = 30000;
    LogLevel log_level = LogLevel::info;
    std::optional<std::string> admin_token;  // FLOWFILL_ADMIN_TOKEN
    std::size_t worker_threads = 64;
};

inline constexpr const char* kAdminTokenHeader = "X-Flowfill-Admin-Token";

// "host:port"; throws Error("BadBindAddress") unless 1 <= port <= 65535
// (port 0 is accepted when `allow_ephemeral`).
std::pair<std::string, int> parse_bind_address(std::string_view text, bool allow_ephemeral = false);

// The HTTP face: flow-defined webhooks, /health, /actions and the /admin/*
// surface used by the CLI and the editor.
class Server {
public:
    explicit Server(ServerConfig config, std::shared_ptr<HttpClient> http = make_default_http_client());
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    Engine& engine() { return engine_; }
    const ServerConfig& config() const { return config_; }

    // Throws CompileError.
    std::uint64_t deploy(const FlowDocument& doc);

    // False when the address cannot be bound. Port 0 picks a free port.
    bool bind();
    int port() const { return port_; }
    std::string base_url() const;

    void serve();   // blocks until stop()
    void start();   // serve() on a background thread
    void stop();

private:
    void install_routes();
    void log(LogLevel level, const std::string& message) const;

    ServerConfig config_;
    Engine engine_;
    std::unique_ptr<httplib::Server> http_;
    std::string host_;
    int port_ = 0;
    std::thread thread_;
    std::atomic<bool> stopping_{false};
    std::chrono::steady_clock::time_point started_;
};

}  // namespace flowfill
