#include "testkit/testkit.hpp"

#include <curl/curl.h>
#include <fcntl.h>
#include <httplib.h>
#include <netinet/in.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

extern char** environ;

namespace testkit {

using namespace flowfill;

std::string fixture(std::string_view relative) {
    return std::string(FLOWFILL_FIXTURES) + "/" + std::string(relative);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

FlowDocument load_flow(std::string_view relative) {
    return parse_flow(read_text(fixture(relative)));
}

std::string curl_escape(std::string_view text) {
    static const bool initialised = [] {
        curl_global_init(CURL_GLOBAL_DEFAULT);
        return true;
    }();
    (void)initialised;
    char* out = curl_easy_escape(nullptr, text.data(), static_cast<int>(text.size()));
    if (!out) throw std::runtime_error("curl_easy_escape failed");
    std::string result(out);
    curl_free(out);
    return result;
}

Value request_tree(const std::string& action, Object slots, const std::string& sender) {
    return Object{{"next_action", action},
                  {"sender_id", sender},
                  {"tracker", Object{{"sender_id", sender}, {"slots", std::move(slots)}}}};
}

std::string request_body(const std::string& action, Object slots, const std::string& sender) {
    return to_json(request_tree(action, std::move(slots), sender));
}

protocol::ActionRequest request(const std::string& action, Object slots, const std::string& sender) {
    return protocol::action_request_from_tree(request_tree(action, std::move(slots), sender));
}

namespace {

HttpResult to_result(const httplib::Result& res) {
    HttpResult out;
    if (!res) return out;
    out.ok = true;
    out.status = res->status;
    out.body = res->body;
    out.content_type = res->get_header_value("Content-Type");
    return out;
}

httplib::Headers headers_for(const std::string& name, const std::string& value) {
    httplib::Headers h;
    if (!name.empty()) h.emplace(name, value);
    return h;
}

}  // namespace

HttpResult http_post(const std::string& base_url, const std::string& path, const std::string& body,
                     const std::string& header_name, const std::string& header_value) {
    httplib::Client client(base_url);
    client.set_read_timeout(60, 0);
    return to_result(client.Post(path, headers_for(header_name, header_value), body, "application/json"));
}

HttpResult http_get(const std::string& base_url, const std::string& path, const std::string& header_name,
                    const std::string& header_value) {
    httplib::Client client(base_url);
    client.set_read_timeout(60, 0);
    return to_result(client.Get(path, headers_for(header_name, header_value)));
}

FlowDocument demo_flow_for(const std::string& weather_url, const std::string& wiki_url) {
    FlowDocument doc = load_flow("flows/demo.flow.json");
    Value& vars = doc.metadata["vars"];
    vars["weather_base"] = weather_url;
    vars["wiki_base"] = wiki_url;
    return doc;
}

NodeInstance node(std::string id, std::string type, std::string_view config_json,
                  std::vector<std::vector<std::string>> wires) {
    return {std::move(id), std::move(type), std::nullopt, parse_json(config_json), std::move(wires)};
}

FlowDocument marker_flow(const std::string& tag, const std::string& slow_url) {
    FlowDocument doc;
    doc.name = "marker " + tag;
    doc.metadata.set("vars", Object{{"slow", slow_url}});
    doc.nodes = {
        node("in", "http_in", R"({"method":"POST","path":"/hook"})", {{"init"}}),
        node("init", "init", "{}", {{"begin"}}),
        node("begin", "sendtext", R"({"text":")" + tag + R"( begin"})", {{"call"}}),
        node("call", "http_request", R"({"url_from":"config","url":"{{vars.slow}}"})", {{"end"}}),
        node("end", "sendtext", R"({"text":")" + tag + R"( end"})", {{"fin"}}),
        node("fin", "finish", "{}", {{"out"}}),
        node("out", "http_response", "{}", {}),
    };
    return doc;
}

FlowDocument DemoStack::demo_flow() const {
    return demo_flow_for(weather->url(), wiki->url());
}

std::unique_ptr<Server> start_server(ServerConfig config) {
    config.bind_address = "127.0.0.1:0";
    if (config.log_level == LogLevel::info) config.log_level = LogLevel::error;
    auto server = std::make_unique<Server>(config);
    if (!server->bind()) throw std::runtime_error("cannot bind test server");
    server->start();
    return server;
}

std::unique_ptr<DemoStack> start_demo_stack(ServerConfig config) {
    auto stack = std::make_unique<DemoStack>();
    stack->weather = std::make_unique<harness::StubServer>(
        harness::load_stub_rules(fixture("stubs/weatherstack.stub.json")));
    stack->wiki =
        std::make_unique<harness::StubServer>(harness::load_stub_rules(fixture("stubs/opensearch.stub.json")));
    stack->weather->start();
    stack->wiki->start();
    stack->server = start_server(config);
    stack->server->deploy(stack->demo_flow());
    return stack;
}

namespace {

std::string temp_path(const char* tag) {
    static std::atomic<int> counter{0};
    return "/tmp/flowfill-test-" + std::to_string(getpid()) + "-" + tag + "-" + std::to_string(counter++);
}

std::vector<char*> argv_for(const std::vector<std::string>& args, std::vector<std::string>& storage) {
    storage.clear();
    storage.push_back(FLOWFILL_CLI);
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage) argv.push_back(s.data());
    argv.push_back(nullptr);
    return argv;
}

int spawn(const std::vector<std::string>& args, const std::vector<std::string>& env, const std::string& out_file,
          const std::string& err_file) {
    std::vector<std::string> storage;
    auto argv = argv_for(args, storage);

    std::vector<std::string> env_storage;
    for (char** e = environ; *e; ++e) env_storage.emplace_back(*e);
    env_storage.insert(env_storage.end(), env.begin(), env.end());
    std::vector<char*> envp;
    for (auto& s : env_storage) envp.push_back(s.data());
    envp.push_back(nullptr);

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, 1, out_file.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_addopen(&actions, 2, err_file.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    pid_t pid = -1;
    int rc = posix_spawn(&pid, argv[0], &actions, nullptr, argv.data(), envp.data());
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) throw std::runtime_error("cannot spawn " + std::string(argv[0]));
    return pid;
}

int decode_status(int status) {
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
    return -1;
}

}  // namespace

ProcessResult run_cli(const std::vector<std::string>& args, const std::vector<std::string>& env) {
    std::string out_file = temp_path("out"), err_file = temp_path("err");
    int pid = spawn(args, env, out_file, err_file);
    int status = 0;
    waitpid(pid, &status, 0);
    ProcessResult r{decode_status(status), read_text(out_file), read_text(err_file)};
    std::remove(out_file.c_str());
    std::remove(err_file.c_str());
    return r;
}

BackgroundCli::BackgroundCli(const std::vector<std::string>& args) : out_file_(temp_path("bg")) {
    pid_ = spawn(args, {}, out_file_, out_file_ + ".err");
}

BackgroundCli::~BackgroundCli() {
    terminate();
    std::remove(out_file_.c_str());
    std::remove((out_file_ + ".err").c_str());
}

std::optional<int> BackgroundCli::wait_exit(int timeout_ms) {
    if (exit_) return exit_;
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (std::chrono::steady_clock::now() < deadline) {
        int status = 0;
        if (waitpid(pid_, &status, WNOHANG) == pid_) {
            exit_ = decode_status(status);
            return exit_;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    return std::nullopt;
}

int BackgroundCli::terminate() {
    if (exit_) return *exit_;
    kill(pid_, SIGTERM);
    if (auto code = wait_exit(5000)) return *code;
    kill(pid_, SIGKILL);
    int status = 0;
    waitpid(pid_, &status, 0);
    exit_ = decode_status(status);
    return *exit_;
}

std::string BackgroundCli::output() const {
    return read_text(out_file_) + read_text(out_file_ + ".err");
}

int free_port() {
    int fd = socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    socklen_t len = sizeof addr;
    getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    close(fd);
    return ntohs(addr.sin_port);
}

// --- generators -----------------------------------------------------------

namespace {

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
    return items[std::uniform_int_distribution<std::size_t>(0, items.size() - 1)(rng)];
}

bool coin(Rng& rng, double p = 0.5) {
    return std::bernoulli_distribution(p)(rng);
}

}  // namespace

std::string random_text(Rng& rng, std::size_t max_len) {
    static const std::vector<std::string> atoms = {
        "a", "b", "z", "Q", "0", "7", " ", "-", "_", ".", "~", "/", "?", "&", "=", "%", "+", "#", ":", "@",
        "\"", "\\", "'", "{", "}", "[", "]", "\n", "\t", "\xc3\xa9", "\xc3\x9f", "\xe2\x82\xac", "\xf0\x9f\x98\x80",
        "\x01", "\x7f"};
    std::size_t n = std::uniform_int_distribution<std::size_t>(0, max_len)(rng);
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += pick(rng, atoms);
    return s;
}

std::string random_identifier(Rng& rng, std::size_t max_len) {
    static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz_";
    std::size_t n = std::uniform_int_distribution<std::size_t>(1, max_len)(rng);
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
    return s;
}

Value random_number(Rng& rng) {
    switch (std::uniform_int_distribution<int>(0, 4)(rng)) {
        case 0: return Value(std::uniform_int_distribution<int>(-1000, 1000)(rng));
        case 1: return Value(static_cast<std::int64_t>(rng()));
        case 2: return Value::from_double(std::uniform_real_distribution<double>(-1e6, 1e6)(rng));
        case 3: return Value::number_text("12345678901234567890123");
        default: return Value::number_text(pick(rng, std::vector<std::string>{"0.1", "-0.0", "1e300", "2.50", "3E-7"}));
    }
}

Value random_value(Rng& rng, int depth) {
    int top = depth > 0 ? 6 : 3;
    switch (std::uniform_int_distribution<int>(0, top)(rng)) {
        case 0: return Value(nullptr);
        case 1: return Value(coin(rng));
        case 2: return random_number(rng);
        case 3: return Value(random_text(rng));
        case 4: {
            Array a;
            std::size_t n = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
            for (std::size_t i = 0; i < n; ++i) a.push_back(random_value(rng, depth - 1));
            return a;
        }
        default: {
            Object o;
            std::size_t n = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
            for (std::size_t i = 0; i < n; ++i) o.set(random_identifier(rng), random_value(rng, depth - 1));
            return o;
        }
    }
}

protocol::BotResponse random_bot_response(Rng& rng) {
    using protocol::BotResponse;
    switch (std::uniform_int_distribution<int>(0, 4)(rng)) {
        case 0: return BotResponse::make_text(random_text(rng, 20));
        case 1: {
            std::vector<protocol::Button> buttons;
            std::size_t n = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
            for (std::size_t i = 0; i < n; ++i) buttons.push_back({"t" + random_text(rng), random_text(rng)});
            return BotResponse::make_buttons(random_text(rng, 20), std::move(buttons));
        }
        case 2: return BotResponse::make_image("https://example.test/" + random_text(rng));
        case 3: return BotResponse::make_attachment(random_text(rng));
        default: return BotResponse::make_custom(random_value(rng));
    }
}

protocol::ActionResponse random_action_response(Rng& rng) {
    protocol::ActionResponse r;
    std::size_t ne = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
    for (std::size_t i = 0; i < ne; ++i) r.events.push_back(protocol::Event::slot_set(random_identifier(rng), random_value(rng)));
    std::size_t nr = std::uniform_int_distribution<std::size_t>(0, 4)(rng);
    for (std::size_t i = 0; i < nr; ++i) r.responses.push_back(random_bot_response(rng));
    return r;
}

}  // namespace testkit
