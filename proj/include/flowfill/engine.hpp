#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "flowfill/debug_bus.hpp"
#include "flowfill/flow_model.hpp"
#include "flowfill/nodes.hpp"
#include "flowfill/protocol.hpp"

namespace flowfill {

struct Entry {
    std::string method;
    std::string path;

    friend auto operator<=>(const Entry&, const Entry&) = default;
};

class CompileError : public Error {
public:
    explicit CompileError(ValidationReport report);
    const ValidationReport& report() const { return report_; }

private:
    ValidationReport report_;
};

struct CompiledNode {
    std::string id;
    std::string type;
    std::unique_ptr<Node> node;
    std::vector<std::vector<std::size_t>> wires;  // port -> target indices
};

struct CompiledFlow {
    std::uint64_t version_id = 0;
    std::map<Entry, std::size_t> entry_points;
    std::vector<std::size_t> topo_order;
    std::vector<CompiledNode> nodes;
    FlowDocument document;
    std::vector<std::string> actions;
};

// Templates and configs are parsed eagerly. Throws CompileError.
std::shared_ptr<CompiledFlow> compile(const FlowDocument& doc, const NodeRegistry& registry,
                                      bool force_strict = false);

struct BranchError {
    std::string node_id;
    std::string code;
    std::string message;
};

struct ExecutionResult {
    std::optional<protocol::ActionResponse> terminal;
    std::vector<BranchError> branch_errors;
    std::vector<DebugEvent> debug_events;
    double duration_ms = 0;
    std::uint64_t flow_version = 0;
    std::size_t node_evaluations = 0;
    std::size_t clones = 0;

    // NoTerminalResponse: nothing reached an http_response node.
    bool no_terminal() const { return !terminal.has_value(); }
};

Value execution_result_to_tree(const ExecutionResult& r);

// Per-execution hooks supplied by the caller of execute().
struct ExecutionEnv {
    HttpClient* http = nullptr;
    const std::atomic<bool>* cancelled = nullptr;
    bool manual = false;
    // Receives each event as it happens; must assign seq. May be empty.
    std::function<void(DebugEvent&)> publish;
    std::string id_prefix = "m";
};

// Runs one request through `flow` starting at `entry`. Throws
// Error("UnknownEntry") when `entry` is not an http_in of the flow.
ExecutionResult execute(const CompiledFlow& flow, const Entry& entry, const protocol::ActionRequest& request,
                        const ExecutionEnv& env);

struct EngineOptions {
    const NodeRegistry* registry = &NodeRegistry::standard();
    std::shared_ptr<HttpClient> http = make_default_http_client();
    bool strict_templates = false;
    std::chrono::milliseconds drain_timeout{30000};
};

struct DrainReport {
    std::uint64_t version = 0;
    bool drained = false;  // false: stragglers were cancelled at the timeout
    double duration_ms = 0;
};

// Holds the live flow version and executes requests against it. Deploys swap
// the version atomically with respect to execution start; executions already
// running finish on the version they started with.
class Engine {
public:
    explicit Engine(EngineOptions options = {});
    ~Engine();
    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    // Throws CompileError and keeps serving the previous version.
    std::uint64_t deploy(const FlowDocument& doc);

    ExecutionResult execute(const Entry& entry, const protocol::ActionRequest& request);
    ExecutionResult inject(const Entry& entry, const protocol::ActionRequest& request);

    // 0 before the first deploy.
    std::uint64_t version() const;
    std::shared_ptr<const CompiledFlow> current() const;

    DebugBus& debug_bus() { return bus_; }
    std::vector<DrainReport> drain_reports() const;
    std::size_t in_flight() const;
    const NodeRegistry& registry() const { return *options_.registry; }

private:
    struct Deployment {
        std::shared_ptr<const CompiledFlow> flow;
        std::atomic<bool> cancelled{false};
        std::mutex mu;
        std::condition_variable cv;
        std::size_t running = 0;
    };

    ExecutionResult run(const Entry& entry, const protocol::ActionRequest& request, bool manual);
    void drain(std::shared_ptr<Deployment> old);
    void publish(DebugEvent& e);

    EngineOptions options_;
    mutable std::mutex mu_;
    std::shared_ptr<Deployment> live_;
    std::uint64_t next_version_ = 1;

    std::mutex bus_mu_;
    std::uint64_t seq_ = 0;
    DebugBus bus_;

    std::atomic<std::uint64_t> execution_counter_{0};
    std::atomic<bool> shutting_down_{false};

    mutable std::mutex drain_mu_;
    std::vector<std::thread> drainers_;
    std::vector<DrainReport> drain_reports_;
};

}  // namespace flowfill
