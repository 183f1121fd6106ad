#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "flowfill/template.hpp"
#include "flowfill/value.hpp"

namespace httplib {
class Server;
}

// Desk-scale stand-ins for the external APIs plus a scripted caller that
// replays action requests against a webhook.
namespace flowfill::harness {

inline constexpr std::string_view kStubSchemaVersion = "flowfill-stub/1";
inline constexpr std::string_view kScenarioSchemaVersion = "flowfill-scenario/1";

struct StubRule {
    std::string method = "GET";
    std::string path_prefix = "/";
    std::string query_substring;  // matched against the raw (undecoded) query
    int status = 200;
    Value body;
    int delay_ms = 0;
};

struct RecordedRequest {
    std::string method;
    std::string path;
    std::string query;

    friend bool operator==(const RecordedRequest&, const RecordedRequest&) = default;
};

// Throws ParseError.
std::vector<StubRule> parse_stub_rules(std::string_view json);
std::vector<StubRule> load_stub_rules(const std::string& file);

// First matching rule wins; no match answers 404 with an empty body.
class StubServer {
public:
    explicit StubServer(std::vector<StubRule> rules, std::string bind_address = "127.0.0.1:0");
    ~StubServer();
    StubServer(const StubServer&) = delete;
    StubServer& operator=(const StubServer&) = delete;

    // Throws Error("BindFailed"). start() and serve() bind on demand.
    void bind();
    void start();
    void stop();
    // Blocks until stop() is called from another thread.
    void serve();

    int port() const { return port_; }
    std::string url() const;
    std::vector<RecordedRequest> recorded() const;

private:
    std::vector<StubRule> rules_;
    std::string bind_address_;
    std::unique_ptr<httplib::Server> http_;
    std::thread thread_;
    int port_ = 0;
    bool bound_ = false;
    mutable std::mutex mu_;
    std::vector<RecordedRequest> log_;
};

struct Matcher {
    enum class Op { equals, contains, absent };
    tmpl::Path path;
    Op op = Op::equals;
    Value value;
};

struct ScenarioStep {
    std::string name;
    Value request;                    // ActionRequest-shaped body
    std::optional<int> expect_status;
    std::vector<Matcher> expect;
};

struct Scenario {
    std::string name;
    std::vector<ScenarioStep> steps;
};

// Throws ParseError.
Scenario parse_scenario(std::string_view json);
Scenario load_scenario(const std::string& file);

struct MatcherResult {
    std::string path;
    std::string op;
    bool passed = false;
    std::string detail;
};

struct StepReport {
    std::string name;
    int status = 0;
    bool errored = false;  // transport failure
    std::string error;
    std::vector<MatcherResult> matchers;
    double duration_ms = 0;

    bool passed() const;
};

struct ScenarioReport {
    std::string name;
    std::vector<StepReport> steps;
    double duration_ms = 0;

    bool passed() const;
    Value to_tree() const;
    std::string summary() const;
};

// Evaluates one matcher against a parsed response body.
MatcherResult evaluate(const Matcher& m, const Value& response);

// Steps run in order; a failing step does not stop later ones.
ScenarioReport run_scenario(const Scenario& scenario, const std::string& webhook_url);

}  // namespace flowfill::harness
