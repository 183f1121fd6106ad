#include "flowfill/cli.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <pthread.h>
#include <signal.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

#include "flowfill/harness.hpp"
#include "flowfill/server.hpp"

namespace flowfill::cli {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("FileNotFound", "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::pair<std::string, std::string> split_assignment(const std::string& text, const char* what) {
    auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw Error("BadArgument", std::string(what) + " must look like key=value");
    return {text.substr(0, eq), text.substr(eq + 1)};
}

// Runs `body` with SIGINT/SIGTERM routed to `on_signal` on a helper thread.
template <typename Body, typename OnSignal>
int with_signal_stop(Body&& body, OnSignal&& on_signal) {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    sigset_t previous;
    pthread_sigmask(SIG_BLOCK, &set, &previous);
    std::atomic<bool> done{false};
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&set, &sig);
        if (!done) on_signal();
    });
    int code = body();
    done = true;
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    pthread_sigmask(SIG_SETMASK, &previous, nullptr);
    return code;
}

struct RunOptions {
    std::string flow;
    std::string bind = "127.0.0.1:5055";
    bool strict = false;
    std::string log_level = "info";
    std::vector<std::string> vars;
    bool real_apis = false;
    int drain_timeout_ms = 30000;
};

int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err) {
    ServerConfig cfg;
    cfg.bind_address = o.bind;
    cfg.flow_path = o.flow;
    cfg.strict_templates = o.strict;
    cfg.drain_timeout_ms = o.drain_timeout_ms;
    try {
        cfg.log_level = parse_log_level(o.log_level);
        parse_bind_address(cfg.bind_address);
    } catch (const Error& e) {
        err << e.what() << "\n";
        return kBindFailure;
    }
    if (const char* token = std::getenv("FLOWFILL_ADMIN_TOKEN"); token && *token) cfg.admin_token = token;

    Server server(cfg);
    if (!o.flow.empty()) {
        FlowDocument doc;
        try {
            doc = parse_flow(read_file(o.flow));
        } catch (const Error& e) {
            err << "cannot load flow: " << e.what() << "\n";
            return kInvalidFlow;
        }
        Value& vars = doc.metadata["vars"];
        if (o.real_apis) {
            vars["weather_base"] = "http://api.weatherstack.com";
            vars["wiki_base"] = "https://en.wikipedia.org";
            if (const char* key = std::getenv("WEATHERSTACK_ACCESS_KEY")) vars["weather_key"] = key;
        }
        try {
            for (const auto& v : o.vars) {
                auto [k, val] = split_assignment(v, "--var");
                vars[k] = val;
            }
        } catch (const Error& e) {
            err << e.what() << "\n";
            return kInvalidFlow;
        }
        if (vars.is_object() && vars.as_object().empty()) doc.metadata.erase("vars");
        try {
            server.deploy(doc);
        } catch (const CompileError& e) {
            err << format_report(e.report());
            return kInvalidFlow;
        }
    }
    if (!server.bind()) {
        err << "cannot bind " << cfg.bind_address << "\n";
        return kBindFailure;
    }
    out << "flowfill serving on " << server.base_url() << " (flow version " << server.engine().version() << ")"
        << std::endl;
    return with_signal_stop(
        [&] {
            server.serve();
            return kOk;
        },
        [&] { server.stop(); });
}

int cmd_check(const std::string& flow, bool json, std::ostream& out, std::ostream& err) {
    FlowDocument doc;
    try {
        doc = parse_flow(read_file(flow));
    } catch (const Error& e) {
        err << "cannot load flow: " << e.what() << "\n";
        return kInvalidFlow;
    }
    ValidationReport report = validate_flow(doc, NodeRegistry::standard());
    if (json) {
        out << to_json(report_to_tree(report), {2, false}) << "\n";
    } else {
        out << format_report(report);
    }
    return report.deployable() ? kOk : kInvalidFlow;
}

struct SendOptions {
    std::string url = "http://127.0.0.1:5055/webhook";
    std::string action;
    std::vector<std::string> slots;
    std::string sender = "cli";
};

int cmd_send(const SendOptions& o, std::ostream& out, std::ostream& err) {
    static const std::regex re(R"(^(https?://[^/]+)(.*)$)");
    std::smatch m;
    if (!std::regex_match(o.url, m, re)) {
        err << "bad URL " << o.url << "\n";
        return kTransportError;
    }
    Object slots;
    try {
        for (const auto& s : o.slots) {
            auto [k, v] = split_assignment(s, "--slot");
            slots.set(k, v == "null" ? Value(nullptr) : Value(v));
        }
    } catch (const Error& e) {
        err << e.what() << "\n";
        return kTransportError;
    }
    Value request = Object{{"next_action", o.action},
                           {"sender_id", o.sender},
                           {"tracker", Object{{"sender_id", o.sender}, {"slots", std::move(slots)}}}};

    httplib::Client client(m[1].str());
    client.set_read_timeout(60, 0);
    std::string target = m[2].str().empty() ? "/" : m[2].str();
    auto res = client.Post(target, to_json(request), "application/json");
    if (!res) {
        err << "request failed: " << httplib::to_string(res.error()) << "\n";
        return kTransportError;
    }
    try {
        out << to_json(parse_json(res->body), {2, false}) << "\n";
    } catch (const ParseError&) {
        out << res->body << "\n";
    }
    if (res->status >= 500) return kHttp5xx;
    if (res->status >= 400) return kHttp4xx;
    return kOk;
}

int cmd_stub(const std::string& rules_file, const std::string& bind, std::ostream& out, std::ostream& err) {
    std::unique_ptr<harness::StubServer> stub;
    try {
        stub = std::make_unique<harness::StubServer>(harness::load_stub_rules(rules_file), bind);
        stub->bind();
    } catch (const Error& e) {
        err << e.what() << "\n";
        return e.code() == "BindFailed" ? kBindFailure : kInvalidFlow;
    }
    out << "stub serving " << rules_file << " on " << stub->url() << std::endl;
    return with_signal_stop(
        [&] {
            stub->serve();
            return kOk;
        },
        [&] { stub->stop(); });
}

int cmd_scenario(const std::string& file, const std::string& url, bool json, std::ostream& out, std::ostream& err) {
    harness::ScenarioReport report;
    try {
        report = harness::run_scenario(harness::load_scenario(file), url);
    } catch (const Error& e) {
        err << e.what() << "\n";
        return kTransportError;
    }
    if (json) {
        out << to_json(report.to_tree(), {2, false}) << "\n";
    } else {
        out << report.summary();
    }
    return report.passed() ? kOk : kHttp4xx;
}

}  // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"flowfill: flow-based fulfillment server for chatbot custom actions"};
    app.require_subcommand(1);

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "load, validate and deploy a flow, then serve it");
    run_cmd->add_option("--flow", run.flow, "flow document (flowfill/1 JSON)");
    run_cmd->add_option("--bind", run.bind, "HOST:PORT to listen on");
    run_cmd->add_flag("--strict-templates", run.strict, "treat missing template values as branch errors");
    run_cmd->add_option("--log-level", run.log_level, "error|warn|info|debug")
        ->check(CLI::IsMember({"error", "warn", "info", "debug"}));
    run_cmd->add_option("--var", run.vars, "override a flow variable (vars.KEY), KEY=VALUE");
    run_cmd->add_flag("--real-apis", run.real_apis,
                      "point the demo variables at the live weather/Wikipedia services (WEATHERSTACK_ACCESS_KEY)");
    run_cmd->add_option("--drain-timeout-ms", run.drain_timeout_ms, "how long old versions may finish after deploy");

    std::string check_flow;
    bool check_json = false;
    auto* check_cmd = app.add_subcommand("check", "validate a flow document offline");
    check_cmd->add_option("--flow", check_flow, "flow document")->required();
    check_cmd->add_flag("--json", check_json, "print the report as JSON");

    SendOptions send;
    auto* send_cmd = app.add_subcommand("send", "POST a minimal action request to a webhook");
    send_cmd->add_option("--url", send.url, "webhook URL");
    send_cmd->add_option("--action", send.action, "action name")->required();
    send_cmd->add_option("--slot", send.slots, "slot value KEY=VALUE (VALUE null clears)");
    send_cmd->add_option("--sender", send.sender, "sender id");

    std::string stub_rules, stub_bind = "127.0.0.1:8091";
    auto* stub_cmd = app.add_subcommand("stub", "serve a stub API from a rules file");
    stub_cmd->add_option("--rules", stub_rules, "stub rules (flowfill-stub/1 JSON)")->required();
    stub_cmd->add_option("--bind", stub_bind, "HOST:PORT");

    std::string scenario_file, scenario_url = "http://127.0.0.1:5055/webhook";
    bool scenario_json = false;
    auto* scenario_cmd = app.add_subcommand("scenario", "replay a scripted dialog against a webhook");
    scenario_cmd->add_option("--file", scenario_file, "scenario (flowfill-scenario/1 JSON)")->required();
    scenario_cmd->add_option("--url", scenario_url, "webhook URL");
    scenario_cmd->add_flag("--json", scenario_json, "print the report as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    if (*run_cmd) return cmd_run(run, out, err);
    if (*check_cmd) return cmd_check(check_flow, check_json, out, err);
    if (*send_cmd) return cmd_send(send, out, err);
    if (*stub_cmd) return cmd_stub(stub_rules, stub_bind, out, err);
    if (*scenario_cmd) return cmd_scenario(scenario_file, scenario_url, scenario_json, out, err);
    return kOk;
}

}  // namespace flowfill::cli
