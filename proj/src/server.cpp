#include "flowfill/server.hpp"

#include <httplib.h>

#include <charconv>
#include <iostream>

namespace flowfill {

namespace {

constexpr const char* kJson = "application/json";

void reply_json(httplib::Response& res, int status, const std::string& body) {
    res.status = status;
    res.set_content(body, kJson);
}

void reply_error(httplib::Response& res, int status, std::string_view action, std::string_view message) {
    reply_json(res, status, protocol::serialize_error(action, message));
}

std::string describe(const ParseError& e) {
    return e.code() + ": " + e.what();
}

}  // namespace

LogLevel parse_log_level(std::string_view text) {
    if (text == "error") return LogLevel::error;
    if (text == "warn") return LogLevel::warn;
    if (text == "info") return LogLevel::info;
    if (text == "debug") return LogLevel::debug;
    throw Error("BadLogLevel", "log level must be error, warn, info or debug");
}

std::pair<std::string, int> parse_bind_address(std::string_view text, bool allow_ephemeral) {
    auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon == 0) {
        throw Error("BadBindAddress", "expected HOST:PORT, got '" + std::string(text) + "'");
    }
    std::string_view port_text = text.substr(colon + 1);
    int port = -1;
    auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port > 65535 ||
        port < (allow_ephemeral ? 0 : 1)) {
        throw Error("BadBindAddress", "port must be in 1-65535, got '" + std::string(port_text) + "'");
    }
    return {std::string(text.substr(0, colon)), port};
}

Server::Server(ServerConfig config, std::shared_ptr<HttpClient> http)
    : config_(std::move(config)),
      engine_(EngineOptions{&NodeRegistry::standard(), std::move(http), config_.strict_templates,
                            std::chrono::milliseconds(config_.drain_timeout_ms)}),
      http_(std::make_unique<httplib::Server>()),
      started_(std::chrono::steady_clock::now()) {
    std::size_t threads = config_.worker_threads;
    http_->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    // No SO_REUSEPORT: a second listener on a busy port must fail to bind.
    http_->set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    install_routes();
}

Server::~Server() {
    stop();
}

std::uint64_t Server::deploy(const FlowDocument& doc) {
    std::uint64_t v = engine_.deploy(doc);
    log(LogLevel::info, "deployed flow '" + doc.name + "' as version " + std::to_string(v));
    return v;
}

bool Server::bind() {
    auto [host, port] = parse_bind_address(config_.bind_address, true);
    host_ = host;
    if (port == 0) {
        port_ = http_->bind_to_any_port(host);
        return port_ > 0;
    }
    if (!http_->bind_to_port(host, port)) return false;
    port_ = port;
    return true;
}

std::string Server::base_url() const {
    return "http://" + host_ + ":" + std::to_string(port_);
}

void Server::serve() {
    log(LogLevel::info, "listening on " + base_url());
    http_->listen_after_bind();
}

void Server::start() {
    thread_ = std::thread([this] { serve(); });
    http_->wait_until_ready();
}

void Server::stop() {
    if (stopping_.exchange(true)) return;
    engine_.debug_bus().close_all();
    http_->stop();
    if (thread_.joinable()) thread_.join();
}

void Server::log(LogLevel level, const std::string& message) const {
    if (level > config_.log_level) return;
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::cerr << "[flowfill] " << names[static_cast<int>(level)] << ": " << message << "\n";
}

void Server::install_routes() {
    httplib::Server& svr = *http_;

    svr.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
        if (config_.admin_token && req.path.rfind("/admin", 0) == 0 &&
            req.get_header_value(kAdminTokenHeader) != *config_.admin_token) {
            reply_error(res, 401, "", "admin token missing or wrong");
            return httplib::Server::HandlerResponse::Handled;
        }
        return httplib::Server::HandlerResponse::Unhandled;
    });

    svr.set_logger([this](const httplib::Request& req, const httplib::Response& res) {
        log(LogLevel::debug, req.method + " " + req.path + " -> " + std::to_string(res.status));
    });

    svr.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
        auto uptime = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started_);
        reply_json(res, 200,
                   to_json(Object{{"status", "ok"},
                                  {"flow_version", static_cast<std::int64_t>(engine_.version())},
                                  {"uptime_ms", static_cast<std::int64_t>(uptime.count())}}));
    });

    svr.Get("/actions", [this](const httplib::Request&, httplib::Response& res) {
        Array list;
        if (auto flow = engine_.current()) {
            for (const auto& a : flow->actions) list.push_back(a);
        }
        reply_json(res, 200, to_json(list));
    });

    svr.Get("/admin/flow", [this](const httplib::Request&, httplib::Response& res) {
        auto flow = engine_.current();
        FlowDocument doc = flow ? flow->document : FlowDocument{};
        reply_json(res, 200, serialize_flow(doc));
    });

    svr.Post("/admin/flow", [this](const httplib::Request& req, httplib::Response& res) {
        FlowDocument doc;
        try {
            doc = parse_flow(req.body);
        } catch (const ParseError& e) {
            reply_error(res, 400, "", describe(e));
            return;
        }
        try {
            std::uint64_t v = deploy(doc);
            reply_json(res, 200, to_json(Object{{"version", static_cast<std::int64_t>(v)}}));
        } catch (const CompileError& e) {
            log(LogLevel::warn, "deploy rejected:\n" + format_report(e.report()));
            reply_json(res, 422, to_json(report_to_tree(e.report())));
        }
    });

    svr.Get("/admin/nodes", [this](const httplib::Request&, httplib::Response& res) {
        Array specs;
        for (const NodeSpec* spec : engine_.registry().specs()) specs.push_back(node_spec_to_tree(*spec));
        reply_json(res, 200, to_json(specs));
    });

    svr.Get("/admin/debug", [this](const httplib::Request&, httplib::Response& res) {
        auto sub = engine_.debug_bus().subscribe();
        res.set_header("Cache-Control", "no-cache");
        auto last_write = std::make_shared<std::chrono::steady_clock::time_point>(std::chrono::steady_clock::now());
        auto opened = std::make_shared<bool>(false);
        res.set_chunked_content_provider(
            "text/event-stream",
            [this, sub, last_write, opened](std::size_t, httplib::DataSink& sink) {
                if (!*opened) {
                    *opened = true;
                    std::string hello = ": connected\n\n";
                    return sink.write(hello.data(), hello.size());
                }
                if (stopping_) {
                    sink.done();
                    return true;
                }
                if (auto e = sub->next(std::chrono::milliseconds(200))) {
                    std::string frame = "id: " + std::to_string(e->seq) + "\nevent: debug\ndata: " +
                                        to_json(debug_event_to_tree(*e)) + "\n\n";
                    *last_write = std::chrono::steady_clock::now();
                    return sink.write(frame.data(), frame.size());
                }
                if (sub->closed()) {
                    sink.done();
                    return true;
                }
                if (std::chrono::steady_clock::now() - *last_write > std::chrono::seconds(5)) {
                    *last_write = std::chrono::steady_clock::now();
                    std::string ping = ": keepalive\n\n";
                    return sink.write(ping.data(), ping.size());
                }
                return sink.is_writable();
            },
            [sub](bool) { sub->close(); });
    });

    svr.Post("/admin/inject", [this](const httplib::Request& req, httplib::Response& res) {
        Value body;
        try {
            body = parse_json(req.body);
        } catch (const ParseError& e) {
            reply_error(res, 400, "", describe(e));
            return;
        }
        Entry entry{"POST", "/webhook"};
        if (const Value* e = body.find("entry"); e && e->is_object()) {
            if (const Value* m = e->find("method"); m && m->is_string()) entry.method = m->as_string();
            if (const Value* p = e->find("path"); p && p->is_string()) entry.path = p->as_string();
        }
        const Value* request = body.find("request");
        if (!request) {
            reply_error(res, 400, "", "MissingField: request");
            return;
        }
        protocol::ActionRequest action;
        try {
            action = protocol::action_request_from_tree(*request);
        } catch (const ParseError& e) {
            reply_error(res, 400, "", describe(e));
            return;
        }
        try {
            ExecutionResult result = engine_.inject(entry, action);
            reply_json(res, 200, to_json(execution_result_to_tree(result)));
        } catch (const Error& e) {
            if (e.code() != "UnknownEntry") throw;
            reply_error(res, 404, action.next_action, e.what());
        }
    });

    auto webhook = [this](const httplib::Request& req, httplib::Response& res) {
        Entry entry{req.method, req.path};
        auto flow = engine_.current();
        if (!flow || !flow->entry_points.count(entry)) {
            reply_error(res, 404, "", "no endpoint " + req.method + " " + req.path);
            return;
        }
        protocol::ActionRequest action;
        try {
            action = protocol::parse_action_request(req.body);
        } catch (const ParseError& e) {
            reply_error(res, 400, "", describe(e));
            return;
        }
        ExecutionResult result;
        try {
            result = engine_.execute(entry, action);
        } catch (const Error& e) {
            if (e.code() != "UnknownEntry") throw;
            reply_error(res, 404, action.next_action, e.what());
            return;
        }
        if (result.terminal) {
            reply_json(res, 200, protocol::serialize_action_response(*result.terminal));
            return;
        }
        if (result.branch_errors.empty()) {
            reply_error(res, 400, action.next_action, "no flow branch handles this action");
            return;
        }
        const BranchError& first = result.branch_errors.front();
        log(LogLevel::warn, action.next_action + " failed at node " + first.node_id + ": " + first.message);
        reply_error(res, 500, action.next_action, first.code + " at node " + first.node_id + ": " + first.message);
    };
    svr.Post(".*", webhook);
    svr.Get(".*", webhook);

    svr.set_exception_handler([this](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        log(LogLevel::error, what);
        reply_error(res, 500, "", what);
    });
}

}  // namespace flowfill
