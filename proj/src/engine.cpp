#include "flowfill/engine.hpp"

#include <deque>

namespace flowfill {

namespace {

std::int64_t wall_clock_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

std::vector<std::size_t> topological_order(const std::vector<CompiledNode>& nodes) {
    std::vector<std::size_t> indegree(nodes.size(), 0);
    for (const auto& n : nodes) {
        for (const auto& port : n.wires) {
            for (std::size_t t : port) ++indegree[t];
        }
    }
    std::deque<std::size_t> ready;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (indegree[i] == 0) ready.push_back(i);
    }
    std::vector<std::size_t> order;
    while (!ready.empty()) {
        std::size_t v = ready.front();
        ready.pop_front();
        order.push_back(v);
        for (const auto& port : nodes[v].wires) {
            for (std::size_t t : port) {
                if (--indegree[t] == 0) ready.push_back(t);
            }
        }
    }
    return order;
}

}  // namespace

CompileError::CompileError(ValidationReport report)
    : Error("CompileError", "flow does not compile:\n" + format_report(report)), report_(std::move(report)) {}

std::shared_ptr<CompiledFlow> compile(const FlowDocument& doc, const NodeRegistry& registry, bool force_strict) {
    ValidationReport report = validate_flow(doc, registry);
    if (!report.deployable()) throw CompileError(std::move(report));

    CompileOptions opts;
    opts.force_strict = force_strict;
    if (const Value* vars = doc.metadata.find("vars")) opts.vars = *vars;

    auto flow = std::make_shared<CompiledFlow>();
    flow->document = doc;
    flow->actions = list_declared_actions(doc);

    std::map<std::string, std::size_t, std::less<>> index;
    for (std::size_t i = 0; i < doc.nodes.size(); ++i) index.emplace(doc.nodes[i].id, i);

    for (std::size_t i = 0; i < doc.nodes.size(); ++i) {
        const NodeInstance& n = doc.nodes[i];
        const NodeSpec* spec = registry.find(n.type);
        CompiledNode cn;
        cn.id = n.id;
        cn.type = n.type;
        try {
            cn.node = spec->build(n, opts);
        } catch (const ConfigError& e) {
            // Only reachable through force_strict differences; report like validation would.
            ValidationReport r;
            r.errors.push_back({IssueCode::bad_config, n.id, std::string("config.") + e.what()});
            throw CompileError(std::move(r));
        }
        for (const auto& port : n.wires) {
            std::vector<std::size_t> targets;
            for (const auto& t : port) targets.push_back(index.at(t));
            cn.wires.push_back(std::move(targets));
        }
        if (n.type == "http_in") {
            HttpInConfig ep = HttpInConfig::parse(n.config);
            flow->entry_points.emplace(Entry{ep.method, ep.path}, i);
        }
        flow->nodes.push_back(std::move(cn));
    }
    flow->topo_order = topological_order(flow->nodes);
    return flow;
}

Value execution_result_to_tree(const ExecutionResult& r) {
    Array errors;
    for (const auto& e : r.branch_errors) {
        errors.push_back(Object{{"node_id", e.node_id}, {"code", e.code}, {"message", e.message}});
    }
    Array events;
    for (const auto& e : r.debug_events) events.push_back(debug_event_to_tree(e));
    return Object{{"terminal", r.terminal ? protocol::action_response_to_tree(*r.terminal) : Value(nullptr)},
                  {"branch_errors", std::move(errors)},
                  {"debug_events", std::move(events)},
                  {"duration_ms", Value::from_double(r.duration_ms)},
                  {"flow_version", static_cast<std::int64_t>(r.flow_version)}};
}

ExecutionResult execute(const CompiledFlow& flow, const Entry& entry, const protocol::ActionRequest& request,
                        const ExecutionEnv& env) {
    auto started = std::chrono::steady_clock::now();
    auto it = flow.entry_points.find(entry);
    if (it == flow.entry_points.end()) {
        throw Error("UnknownEntry", "no http_in node serves " + entry.method + " " + entry.path);
    }

    ExecutionResult result;
    result.flow_version = flow.version_id;

    std::size_t id_counter = 0;
    auto next_msg_id = [&] { return env.id_prefix + "." + std::to_string(++id_counter); };

    auto record = [&](const std::string& node_id, const std::string& msg_id, Level level, Value body) {
        DebugEvent e;
        e.node_id = node_id;
        e.msg_id = msg_id;
        e.level = level;
        e.body = std::move(body);
        e.timestamp = wall_clock_ms();
        e.manual = env.manual;
        if (env.publish) env.publish(e);
        result.debug_events.push_back(std::move(e));
    };

    NodeContext ctx;
    ctx.request = &request;
    ctx.next_msg_id = next_msg_id;
    ctx.http = env.http;
    ctx.cancelled = env.cancelled;

    MessageObject seed;
    seed.payload = request.raw;
    seed.request = request.raw;
    seed.msg_id = next_msg_id();

    std::deque<std::pair<std::size_t, MessageObject>> frontier;
    frontier.emplace_back(it->second, std::move(seed));

    while (!frontier.empty()) {
        auto [index, msg] = std::move(frontier.front());
        frontier.pop_front();
        const CompiledNode& node = flow.nodes[index];

        if (env.cancelled && env.cancelled->load()) {
            result.branch_errors.push_back({node.id, "Cancelled", "execution cancelled after drain timeout"});
            record(node.id, msg.msg_id, Level::error, Object{{"error", "Cancelled"}});
            continue;
        }

        ++result.node_evaluations;
        std::string msg_id = msg.msg_id;
        NodeOutcome outcome;
        try {
            outcome = node.node->process(std::move(msg), ctx);
        } catch (const NodeError& e) {
            result.branch_errors.push_back({node.id, e.code(), e.what()});
            record(node.id, msg_id, Level::error, Object{{"error", e.code()}, {"message", e.what()}});
            continue;
        } catch (const std::exception& e) {
            result.branch_errors.push_back({node.id, "InternalError", e.what()});
            record(node.id, msg_id, Level::error, Object{{"error", "InternalError"}, {"message", e.what()}});
            continue;
        }

        for (auto& d : outcome.diagnostics) record(node.id, d.msg_id, d.level, std::move(d.body));

        if (outcome.terminal) {
            if (!result.terminal) {
                result.terminal = std::move(outcome.terminal);
            } else {
                record(node.id, msg_id, Level::warning,
                       Object{{"warning", "additional terminal response ignored; the first one was already sent"}});
            }
        }

        std::stable_sort(outcome.outputs.begin(), outcome.outputs.end(),
                         [](const Emission& a, const Emission& b) { return a.port < b.port; });
        for (auto& out : outcome.outputs) {
            if (out.port >= node.wires.size()) continue;
            const auto& targets = node.wires[out.port];
            if (targets.empty()) continue;
            // Original to the first target, deep clones to the rest.
            std::vector<MessageObject> clones;
            for (std::size_t k = 1; k < targets.size(); ++k) {
                clones.push_back(out.msg);
                clones.back().msg_id = next_msg_id();
                ++result.clones;
            }
            frontier.emplace_back(targets.front(), std::move(out.msg));
            for (std::size_t k = 1; k < targets.size(); ++k) frontier.emplace_back(targets[k], std::move(clones[k - 1]));
        }
    }

    result.duration_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return result;
}

Engine::Engine(EngineOptions options) : options_(std::move(options)) {}

Engine::~Engine() {
    shutting_down_ = true;
    std::vector<std::thread> drainers;
    {
        std::lock_guard lock(drain_mu_);
        drainers.swap(drainers_);
    }
    for (auto& t : drainers) {
        if (t.joinable()) t.join();
    }
    bus_.close_all();
}

std::uint64_t Engine::deploy(const FlowDocument& doc) {
    auto flow = compile(doc, *options_.registry, options_.strict_templates);
    auto fresh = std::make_shared<Deployment>();

    std::shared_ptr<Deployment> old;
    std::uint64_t version;
    {
        std::lock_guard lock(mu_);
        version = next_version_++;
        flow->version_id = version;
        fresh->flow = std::move(flow);
        old = std::exchange(live_, fresh);
    }
    if (old) {
        std::lock_guard lock(drain_mu_);
        drainers_.emplace_back([this, old] { drain(old); });
    }
    return version;
}

void Engine::drain(std::shared_ptr<Deployment> old) {
    auto started = std::chrono::steady_clock::now();
    auto deadline = started + options_.drain_timeout;
    bool drained = false;
    {
        std::unique_lock lock(old->mu);
        while (true) {
            if (old->running == 0) {
                drained = true;
                break;
            }
            if (std::chrono::steady_clock::now() >= deadline || shutting_down_) break;
            old->cv.wait_for(lock, std::chrono::milliseconds(50));
        }
    }
    if (!drained) old->cancelled = true;
    DrainReport report{old->flow->version_id, drained,
                       std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count()};
    std::lock_guard lock(drain_mu_);
    drain_reports_.push_back(report);
}

void Engine::publish(DebugEvent& e) {
    std::lock_guard lock(bus_mu_);
    e.seq = ++seq_;
    bus_.publish(e);
}

ExecutionResult Engine::run(const Entry& entry, const protocol::ActionRequest& request, bool manual) {
    std::shared_ptr<Deployment> dep;
    {
        std::lock_guard lock(mu_);
        dep = live_;
        if (dep) {
            std::lock_guard dlock(dep->mu);
            ++dep->running;
        }
    }
    if (!dep) throw Error("UnknownEntry", "no flow is deployed");

    struct Release {
        Deployment& d;
        ~Release() {
            {
                std::lock_guard lock(d.mu);
                --d.running;
            }
            d.cv.notify_all();
        }
    } release{*dep};

    ExecutionEnv env;
    env.http = options_.http.get();
    env.cancelled = &dep->cancelled;
    env.manual = manual;
    env.publish = [this](DebugEvent& e) { publish(e); };
    env.id_prefix = (manual ? "i" : "x") + std::to_string(++execution_counter_);
    return flowfill::execute(*dep->flow, entry, request, env);
}

ExecutionResult Engine::execute(const Entry& entry, const protocol::ActionRequest& request) {
    return run(entry, request, false);
}

ExecutionResult Engine::inject(const Entry& entry, const protocol::ActionRequest& request) {
    return run(entry, request, true);
}

std::uint64_t Engine::version() const {
    std::lock_guard lock(mu_);
    return live_ ? live_->flow->version_id : 0;
}

std::shared_ptr<const CompiledFlow> Engine::current() const {
    std::lock_guard lock(mu_);
    return live_ ? live_->flow : nullptr;
}

std::vector<DrainReport> Engine::drain_reports() const {
    std::lock_guard lock(drain_mu_);
    return drain_reports_;
}

std::size_t Engine::in_flight() const {
    std::lock_guard lock(mu_);
    if (!live_) return 0;
    std::lock_guard dlock(live_->mu);
    return live_->running;
}

}  // namespace flowfill
