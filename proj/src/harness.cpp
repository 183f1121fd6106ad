#include "flowfill/harness.hpp"

#include <httplib.h>

#include <fstream>
#include <regex>
#include <sstream>

#include "flowfill/server.hpp"

namespace flowfill::harness {

namespace {

std::string read_file(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error("FileNotFound", "cannot open " + file);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void check_version(const Value& tree, std::string_view expected) {
    const Value* v = tree.find("version");
    if (!v || !v->is_string() || v->as_string() != expected) {
        throw ParseError("SchemaViolation", "version", "expected \"" + std::string(expected) + "\"");
    }
}

std::string opt_string(const Value& o, std::string_view key, std::string fallback, const std::string& path) {
    const Value* v = o.find(key);
    if (!v || v->is_null()) return fallback;
    if (!v->is_string()) throw ParseError("SchemaViolation", path + "." + std::string(key), "must be a string");
    return v->as_string();
}

int opt_int(const Value& o, std::string_view key, int fallback, const std::string& path) {
    const Value* v = o.find(key);
    if (!v || v->is_null()) return fallback;
    if (!v->is_number() || !v->as_number().is_integer()) {
        throw ParseError("SchemaViolation", path + "." + std::string(key), "must be an integer");
    }
    return static_cast<int>(v->as_number().to_double());
}

const char* op_name(Matcher::Op op) {
    switch (op) {
        case Matcher::Op::equals: return "equals";
        case Matcher::Op::contains: return "contains";
        case Matcher::Op::absent: return "absent";
    }
    return "?";
}

}  // namespace

std::vector<StubRule> parse_stub_rules(std::string_view json) {
    Value tree = parse_json(json);
    check_version(tree, kStubSchemaVersion);
    const Value* rules = tree.find("rules");
    if (!rules || !rules->is_array() || rules->as_array().empty()) {
        throw ParseError("SchemaViolation", "rules", "needs a non-empty list of rules");
    }
    std::vector<StubRule> out;
    std::size_t i = 0;
    for (const Value& r : rules->as_array()) {
        std::string path = "rules." + std::to_string(i++);
        if (!r.is_object()) throw ParseError("SchemaViolation", path, "must be an object");
        StubRule rule;
        Value match = r.find("match") ? *r.find("match") : Value(Object{});
        Value response = r.find("response") ? *r.find("response") : Value(Object{});
        rule.method = opt_string(match, "method", "GET", path + ".match");
        rule.path_prefix = opt_string(match, "path_prefix", "/", path + ".match");
        rule.query_substring = opt_string(match, "query_substring", "", path + ".match");
        rule.status = opt_int(response, "status", 200, path + ".response");
        rule.delay_ms = opt_int(response, "delay_ms", 0, path + ".response");
        if (const Value* body = response.find("body")) rule.body = *body;
        out.push_back(std::move(rule));
    }
    return out;
}

std::vector<StubRule> load_stub_rules(const std::string& file) {
    return parse_stub_rules(read_file(file));
}

StubServer::StubServer(std::vector<StubRule> rules, std::string bind_address)
    : rules_(std::move(rules)), bind_address_(std::move(bind_address)), http_(std::make_unique<httplib::Server>()) {
    http_->new_task_queue = [] { return new httplib::ThreadPool(64); };
    // No SO_REUSEPORT: a second listener on a busy port must fail to bind.
    http_->set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        auto q = req.target.find('?');
        RecordedRequest rec{req.method, req.path, q == std::string::npos ? "" : req.target.substr(q + 1)};
        {
            std::lock_guard lock(mu_);
            log_.push_back(rec);
        }
        for (const auto& rule : rules_) {
            if (rule.method != rec.method) continue;
            if (rec.path.rfind(rule.path_prefix, 0) != 0) continue;
            if (rec.query.find(rule.query_substring) == std::string::npos) continue;
            if (rule.delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(rule.delay_ms));
            res.status = rule.status;
            if (rule.body.is_string()) {
                res.set_content(rule.body.as_string(), "text/plain");
            } else {
                res.set_content(to_json(rule.body), "application/json");
            }
            return;
        }
        res.status = 404;
        res.set_content("", "text/plain");
    };
    http_->Get(".*", handler);
    http_->Post(".*", handler);
}

StubServer::~StubServer() {
    stop();
}

void StubServer::bind() {
    if (bound_) return;
    auto [host, port] = parse_bind_address(bind_address_, true);
    if (port == 0) {
        port_ = http_->bind_to_any_port(host);
    } else {
        port_ = http_->bind_to_port(host, port) ? port : -1;
    }
    if (port_ <= 0) throw Error("BindFailed", "stub cannot bind " + bind_address_);
    bound_ = true;
}

void StubServer::start() {
    bind();
    thread_ = std::thread([this] { http_->listen_after_bind(); });
    http_->wait_until_ready();
}

void StubServer::serve() {
    bind();
    http_->listen_after_bind();
}

void StubServer::stop() {
    http_->stop();
    if (thread_.joinable()) thread_.join();
}

std::string StubServer::url() const {
    auto [host, port] = parse_bind_address(bind_address_, true);
    return "http://" + host + ":" + std::to_string(port_);
}

std::vector<RecordedRequest> StubServer::recorded() const {
    std::lock_guard lock(mu_);
    return log_;
}

Scenario parse_scenario(std::string_view json) {
    Value tree = parse_json(json);
    check_version(tree, kScenarioSchemaVersion);
    Scenario sc;
    sc.name = opt_string(tree, "name", "", "");
    const Value* steps = tree.find("steps");
    if (steps && !steps->is_array()) throw ParseError("SchemaViolation", "steps", "must be a list");
    if (!steps) return sc;
    std::size_t i = 0;
    for (const Value& s : steps->as_array()) {
        std::string path = "steps." + std::to_string(i);
        if (!s.is_object()) throw ParseError("SchemaViolation", path, "must be an object");
        ScenarioStep step;
        step.name = opt_string(s, "name", "step " + std::to_string(i), path);
        const Value* request = s.find("request");
        if (!request || !request->is_object()) throw ParseError("SchemaViolation", path + ".request", "must be an object");
        step.request = *request;
        if (s.find("status")) step.expect_status = opt_int(s, "status", 0, path);
        if (const Value* expect = s.find("expect")) {
            if (!expect->is_array()) throw ParseError("SchemaViolation", path + ".expect", "must be a list");
            std::size_t j = 0;
            for (const Value& m : expect->as_array()) {
                std::string mpath = path + ".expect." + std::to_string(j++);
                Matcher matcher;
                try {
                    matcher.path = tmpl::Path::parse(opt_string(m, "path", "", mpath));
                } catch (const ParseError& e) {
                    throw ParseError("SchemaViolation", mpath + ".path", e.what());
                }
                std::string op = opt_string(m, "op", "equals", mpath);
                if (op == "equals") matcher.op = Matcher::Op::equals;
                else if (op == "contains") matcher.op = Matcher::Op::contains;
                else if (op == "absent") matcher.op = Matcher::Op::absent;
                else throw ParseError("SchemaViolation", mpath + ".op", "unknown operator " + op);
                if (const Value* v = m.find("value")) matcher.value = *v;
                step.expect.push_back(std::move(matcher));
            }
        }
        sc.steps.push_back(std::move(step));
        ++i;
    }
    return sc;
}

Scenario load_scenario(const std::string& file) {
    return parse_scenario(read_file(file));
}

MatcherResult evaluate(const Matcher& m, const Value& response) {
    MatcherResult r{m.path.str(), op_name(m.op), false, ""};
    const Value* got = tmpl::resolve_path(response, m.path);
    switch (m.op) {
        case Matcher::Op::absent:
            r.passed = got == nullptr;
            if (!r.passed) r.detail = "present: " + to_json(*got);
            break;
        case Matcher::Op::equals:
            r.passed = got && *got == m.value;
            if (!r.passed) r.detail = "expected " + to_json(m.value) + ", got " + (got ? to_json(*got) : "nothing");
            break;
        case Matcher::Op::contains:
            if (got && got->is_string() && m.value.is_string()) {
                r.passed = got->as_string().find(m.value.as_string()) != std::string::npos;
            } else if (got && got->is_array()) {
                for (const Value& v : got->as_array()) r.passed = r.passed || v == m.value;
            }
            if (!r.passed) r.detail = to_json(m.value) + " not found in " + (got ? to_json(*got) : "nothing");
            break;
    }
    return r;
}

bool StepReport::passed() const {
    if (errored) return false;
    for (const auto& m : matchers) {
        if (!m.passed) return false;
    }
    return true;
}

bool ScenarioReport::passed() const {
    for (const auto& s : steps) {
        if (!s.passed()) return false;
    }
    return true;
}

Value ScenarioReport::to_tree() const {
    Array steps_tree;
    for (const auto& s : steps) {
        Array ms;
        for (const auto& m : s.matchers) {
            ms.push_back(Object{{"path", m.path}, {"op", m.op}, {"passed", m.passed}, {"detail", m.detail}});
        }
        steps_tree.push_back(Object{{"name", s.name},
                                    {"passed", s.passed()},
                                    {"status", s.status},
                                    {"errored", s.errored},
                                    {"error", s.error},
                                    {"duration_ms", Value::from_double(s.duration_ms)},
                                    {"matchers", std::move(ms)}});
    }
    return Object{{"name", name},
                  {"passed", passed()},
                  {"duration_ms", Value::from_double(duration_ms)},
                  {"steps", std::move(steps_tree)}};
}

std::string ScenarioReport::summary() const {
    std::ostringstream out;
    std::size_t ok = 0;
    for (const auto& s : steps) {
        out << (s.passed() ? "PASS " : "FAIL ") << s.name << " (HTTP " << s.status << ", "
            << static_cast<long>(s.duration_ms) << " ms)\n";
        if (s.errored) out << "    error: " << s.error << "\n";
        for (const auto& m : s.matchers) {
            if (!m.passed) out << "    " << m.path << " " << m.op << ": " << m.detail << "\n";
        }
        ok += s.passed() ? 1 : 0;
    }
    out << ok << "/" << steps.size() << " step(s) passed\n";
    return out.str();
}

ScenarioReport run_scenario(const Scenario& scenario, const std::string& webhook_url) {
    static const std::regex re(R"(^(https?://[^/]+)(.*)$)");
    std::smatch m;
    if (!std::regex_match(webhook_url, m, re)) throw Error("InvalidUrl", "bad webhook URL " + webhook_url);
    std::string origin = m[1].str();
    std::string target = m[2].str().empty() ? "/" : m[2].str();

    ScenarioReport report;
    report.name = scenario.name;
    auto started = std::chrono::steady_clock::now();
    httplib::Client client(origin);
    client.set_read_timeout(30, 0);

    for (const auto& step : scenario.steps) {
        StepReport sr;
        sr.name = step.name;
        auto t0 = std::chrono::steady_clock::now();
        auto res = client.Post(target, to_json(step.request), "application/json");
        sr.duration_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        if (!res) {
            sr.errored = true;
            sr.error = httplib::to_string(res.error());
        } else {
            sr.status = res->status;
            Value body;
            try {
                body = parse_json(res->body);
            } catch (const ParseError& e) {
                body = Value(res->body);
            }
            if (step.expect_status) {
                MatcherResult status{"<status>", "equals", sr.status == *step.expect_status, ""};
                if (!status.passed) status.detail = "expected " + std::to_string(*step.expect_status) + ", got " + std::to_string(sr.status);
                sr.matchers.push_back(status);
            }
            for (const auto& matcher : step.expect) sr.matchers.push_back(evaluate(matcher, body));
        }
        report.steps.push_back(std::move(sr));
    }
    report.duration_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return report;
}

}  // namespace flowfill::harness
