#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flowfill/flow_model.hpp"
#include "flowfill/message.hpp"
#include "flowfill/protocol.hpp"
#include "flowfill/template.hpp"
#include "flowfill/value.hpp"

namespace flowfill {

// Failure of one branch of an execution. Codes: Timeout, ConnectionFailed,
// BodyTooLarge, MissingValue, NoUrl, NoActionResponse, Cancelled.
class NodeError : public Error {
public:
    using Error::Error;
};

// Invalid node configuration, raised at validation/compile time.
class ConfigError : public Error {
public:
    ConfigError(std::string path, const std::string& message)
        : Error("bad_config", path.empty() ? message : path + ": " + message), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// --- outbound HTTP -------------------------------------------------------

struct HttpCall {
    std::string method;  // GET | POST
    std::string url;
    std::map<std::string, std::string> headers;
    std::optional<std::string> body;
    std::string content_type;
    std::chrono::milliseconds timeout{10000};
    std::size_t max_body_bytes = 8 * 1024 * 1024;
};

struct HttpReply {
    int status = 0;
    std::string body;
    std::string content_type;
};

class HttpClient {
public:
    virtual ~HttpClient() = default;
    // Throws NodeError (Timeout, ConnectionFailed, BodyTooLarge, InvalidUrl).
    virtual HttpReply send(const HttpCall& call) = 0;
};

std::shared_ptr<HttpClient> make_default_http_client();

// --- execution plumbing ----------------------------------------------------

enum class Level { info, warning, error };
const char* level_name(Level level);

struct Diagnostic {
    Level level = Level::info;
    std::string msg_id;
    Value body;
};

struct Emission {
    std::size_t port = 0;
    MessageObject msg;
};

struct NodeOutcome {
    std::vector<Emission> outputs;
    std::vector<Diagnostic> diagnostics;
    std::optional<protocol::ActionResponse> terminal;
};

// Services an execution lends to the nodes it runs.
struct NodeContext {
    const protocol::ActionRequest* request = nullptr;
    std::function<std::string()> next_msg_id;
    HttpClient* http = nullptr;
    const std::atomic<bool>* cancelled = nullptr;
};

class Node {
public:
    virtual ~Node() = default;
    // Throws NodeError for branch failures.
    virtual NodeOutcome process(MessageObject msg, NodeContext& ctx) const = 0;
};

struct CompileOptions {
    Value vars;                     // bound into "{{vars.*}}" placeholders
    bool force_strict = false;      // global strict-templates override
};

// --- node configurations -------------------------------------------------
// Each parses from the node's JSON config and throws ConfigError on misuse.

struct HttpInConfig {
    std::string method;
    std::string path;
    static HttpInConfig parse(const Value& cfg);
};

struct SwitchRule {
    enum class Op { equals, not_equals, contains, is_set };
    Op op = Op::equals;
    std::optional<std::string> value;
};

struct SwitchConfig {
    tmpl::Path property;
    std::vector<SwitchRule> rules;
    bool otherwise = false;
    bool check_all = false;

    std::size_t port_count() const { return rules.size() + (otherwise ? 1 : 0); }
    static SwitchConfig parse(const Value& cfg);
};

struct TemplateConfig {
    tmpl::TemplateString text;
    tmpl::Path target;
    tmpl::Mode mode = tmpl::Mode::raw;
    bool strict = false;
    static TemplateConfig parse(const Value& cfg, const CompileOptions& opts);
};

struct HttpRequestConfig {
    enum class UrlFrom { payload, config };
    std::string method = "GET";
    UrlFrom url_from = UrlFrom::payload;
    std::optional<tmpl::TemplateString> url;
    std::map<std::string, std::string> headers;
    int timeout_ms = 10000;
    std::optional<tmpl::Path> body_from;
    static HttpRequestConfig parse(const Value& cfg, const CompileOptions& opts);
};

struct SendTextConfig {
    tmpl::TemplateString text;
    bool strict = false;
    static SendTextConfig parse(const Value& cfg, const CompileOptions& opts);
};

struct ButtonTemplate {
    tmpl::TemplateString title;
    tmpl::TemplateString payload;
};

struct SendButtonsConfig {
    tmpl::TemplateString text;
    std::vector<ButtonTemplate> buttons;
    bool strict = false;
    static SendButtonsConfig parse(const Value& cfg, const CompileOptions& opts);
};

struct SendExtraConfig {
    enum class Kind { image, attachment };
    Kind kind = Kind::image;
    tmpl::TemplateString media;
    bool strict = false;
    static SendExtraConfig parse(const Value& cfg, const CompileOptions& opts);
};

struct SlotAssignment {
    std::string name;
    std::optional<tmpl::TemplateString> value;  // nullopt clears the slot
};

struct SetSlotsConfig {
    std::vector<SlotAssignment> assignments;
    bool strict = false;
    static SetSlotsConfig parse(const Value& cfg, const CompileOptions& opts);
};

struct DebugConfig {
    enum class Select { whole_message, path };
    Select select = Select::whole_message;
    std::optional<tmpl::Path> path;
    static DebugConfig parse(const Value& cfg);
};

// --- node behaviours -----------------------------------------------------
// The free functions are the behaviour of each node type; the Node classes
// created by the registry wrap them.

MessageObject init_node(const protocol::ActionRequest& request, std::string msg_id);
protocol::ActionResponse finish_node(const MessageObject& msg);

// Ports that receive the message; empty means dropped.
std::vector<std::size_t> switch_route(const SwitchConfig& cfg, const MessageObject& msg);
bool switch_rule_matches(const SwitchRule& rule, const Value* property);

// Writes the rendered text at cfg.target. Missing placeholders (lenient mode)
// are appended to `missing` when non-null.
MessageObject template_node(const TemplateConfig& cfg, MessageObject msg, std::vector<tmpl::Path>* missing = nullptr);

MessageObject http_request_node(const HttpRequestConfig& cfg, MessageObject msg, HttpClient& http);

MessageObject sendtext_node(const SendTextConfig& cfg, MessageObject msg, std::vector<tmpl::Path>* missing = nullptr);
MessageObject sendbuttons_node(const SendButtonsConfig& cfg, MessageObject msg,
                               std::vector<tmpl::Path>* missing = nullptr);
MessageObject sendextra_node(const SendExtraConfig& cfg, MessageObject msg, std::vector<tmpl::Path>* missing = nullptr);
MessageObject setslots_node(const SetSlotsConfig& cfg, MessageObject msg, std::vector<tmpl::Path>* missing = nullptr);

// Body of the debug event: the message tree, the resolved value, or
// {"absent":true,"path":...}.
Value debug_node(const DebugConfig& cfg, const MessageObject& msg);

// --- registry --------------------------------------------------------------

enum class Category { endpoint, protocol, logic, transform, network, emit, diagnostic };
const char* category_name(Category c);

struct NodeSpec {
    std::string type_name;
    int input_arity = 1;
    Category category = Category::transform;
    Value config_schema;
    // Throws ConfigError.
    std::function<std::size_t(const Value& config)> output_arity;
    // Throws ConfigError.
    std::function<std::unique_ptr<Node>(const NodeInstance&, const CompileOptions&)> build;
};

Value node_spec_to_tree(const NodeSpec& spec);

class NodeRegistry {
public:
    void add(NodeSpec spec);
    const NodeSpec* find(std::string_view type_name) const;
    // Ordered by type_name.
    std::vector<const NodeSpec*> specs() const;

    static const NodeRegistry& standard();

private:
    std::map<std::string, NodeSpec, std::less<>> specs_;
};

}  // namespace flowfill
