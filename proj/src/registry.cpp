#include "flowfill/nodes.hpp"

namespace flowfill {

namespace {

Value warning_for_missing(const std::vector<tmpl::Path>& missing) {
    Array paths;
    for (const auto& p : missing) paths.push_back(p.str());
    return Object{{"warning", "placeholder resolved to nothing; rendered as empty"}, {"missing", std::move(paths)}};
}

NodeOutcome pass(MessageObject msg) {
    NodeOutcome out;
    out.outputs.push_back({0, std::move(msg)});
    return out;
}

// Emitter/transform nodes share this shape: apply, forward on port 0, and
// warn about lenient misses.
template <typename Fn>
NodeOutcome apply_with_warnings(MessageObject msg, Fn&& fn) {
    std::vector<tmpl::Path> missing;
    std::string id = msg.msg_id;
    NodeOutcome out = pass(fn(std::move(msg), &missing));
    if (!missing.empty()) out.diagnostics.push_back({Level::warning, id, warning_for_missing(missing)});
    return out;
}

class HttpInNode final : public Node {
public:
    NodeOutcome process(MessageObject msg, NodeContext&) const override { return pass(std::move(msg)); }
};

class HttpResponseNode final : public Node {
public:
    NodeOutcome process(MessageObject msg, NodeContext&) const override {
        if (!msg.response) throw NodeError("NoActionResponse", "message reached http_response without passing a finish node");
        NodeOutcome out;
        out.terminal = std::move(msg.response);
        return out;
    }
};

class InitNode final : public Node {
public:
    NodeOutcome process(MessageObject msg, NodeContext& ctx) const override {
        if (!ctx.request) throw NodeError("NoRequest", "init requires an action request");
        return pass(init_node(*ctx.request, std::move(msg.msg_id)));
    }
};

class FinishNode final : public Node {
public:
    NodeOutcome process(MessageObject msg, NodeContext&) const override {
        protocol::ActionResponse resp = finish_node(msg);
        msg.payload = protocol::action_response_to_tree(resp);
        msg.response = std::move(resp);
        return pass(std::move(msg));
    }
};

class SwitchNode final : public Node {
public:
    explicit SwitchNode(SwitchConfig cfg) : cfg_(std::move(cfg)) {}

    NodeOutcome process(MessageObject msg, NodeContext& ctx) const override {
        NodeOutcome out;
        std::vector<std::size_t> ports = switch_route(cfg_, msg);
        if (ports.empty()) {
            Value tree = message_to_tree(msg);
            const Value* prop = tmpl::resolve_path(tree, cfg_.property);
            out.diagnostics.push_back({Level::warning, msg.msg_id,
                                       Object{{"warning", "no rule matched; message dropped"},
                                              {"property", cfg_.property.str()},
                                              {"value", prop ? *prop : Value(nullptr)}}});
            return out;
        }
        for (std::size_t i = 1; i < ports.size(); ++i) {
            MessageObject clone = msg;
            clone.msg_id = ctx.next_msg_id();
            out.outputs.push_back({ports[i], std::move(clone)});
        }
        out.outputs.insert(out.outputs.begin(), Emission{ports.front(), std::move(msg)});
        return out;
    }

private:
    SwitchConfig cfg_;
};

class TemplateNode final : public Node {
public:
    explicit TemplateNode(TemplateConfig cfg) : cfg_(std::move(cfg)) {}
    NodeOutcome process(MessageObject msg, NodeContext&) const override {
        return apply_with_warnings(std::move(msg), [&](MessageObject m, auto* missing) {
            return template_node(cfg_, std::move(m), missing);
        });
    }

private:
    TemplateConfig cfg_;
};

class HttpRequestNode final : public Node {
public:
    explicit HttpRequestNode(HttpRequestConfig cfg) : cfg_(std::move(cfg)) {}
    NodeOutcome process(MessageObject msg, NodeContext& ctx) const override {
        if (!ctx.http) throw NodeError("ConnectionFailed", "no HTTP client configured");
        return pass(http_request_node(cfg_, std::move(msg), *ctx.http));
    }

private:
    HttpRequestConfig cfg_;
};

class SendTextNode final : public Node {
public:
    explicit SendTextNode(SendTextConfig cfg) : cfg_(std::move(cfg)) {}
    NodeOutcome process(MessageObject msg, NodeContext&) const override {
        return apply_with_warnings(std::move(msg), [&](MessageObject m, auto* missing) {
            return sendtext_node(cfg_, std::move(m), missing);
        });
    }

private:
    SendTextConfig cfg_;
};

class SendButtonsNode final : public Node {
public:
    explicit SendButtonsNode(SendButtonsConfig cfg) : cfg_(std::move(cfg)) {}
    NodeOutcome process(MessageObject msg, NodeContext&) const override {
        return apply_with_warnings(std::move(msg), [&](MessageObject m, auto* missing) {
            return sendbuttons_node(cfg_, std::move(m), missing);
        });
    }

private:
    SendButtonsConfig cfg_;
};

class SendExtraNode final : public Node {
public:
    explicit SendExtraNode(SendExtraConfig cfg) : cfg_(std::move(cfg)) {}
    NodeOutcome process(MessageObject msg, NodeContext&) const override {
        NodeOutcome out = apply_with_warnings(std::move(msg), [&](MessageObject m, auto* missing) {
            return sendextra_node(cfg_, std::move(m), missing);
        });
        const MessageObject& sent = out.outputs.front().msg;
        if (sent.collected_responses.back().media.value_or("").empty()) {
            out.diagnostics.push_back({Level::warning, sent.msg_id, Object{{"warning", "media locator is empty"}}});
        }
        return out;
    }

private:
    SendExtraConfig cfg_;
};

class SetSlotsNode final : public Node {
public:
    explicit SetSlotsNode(SetSlotsConfig cfg) : cfg_(std::move(cfg)) {}
    NodeOutcome process(MessageObject msg, NodeContext&) const override {
        return apply_with_warnings(std::move(msg), [&](MessageObject m, auto* missing) {
            return setslots_node(cfg_, std::move(m), missing);
        });
    }

private:
    SetSlotsConfig cfg_;
};

class DebugNode final : public Node {
public:
    explicit DebugNode(DebugConfig cfg) : cfg_(std::move(cfg)) {}
    NodeOutcome process(MessageObject msg, NodeContext&) const override {
        Diagnostic d{Level::info, msg.msg_id, debug_node(cfg_, msg)};
        NodeOutcome out = pass(std::move(msg));
        out.diagnostics.push_back(std::move(d));
        return out;
    }

private:
    DebugConfig cfg_;
};

// "_pos" is reserved for editor coordinates and allowed everywhere.
Value schema(std::string_view properties_json, std::string_view required_json = "[]") {
    Value props = parse_json(properties_json);
    props["_pos"] = parse_json(R"({"type":"object"})");
    return Object{{"type", "object"},
                  {"properties", std::move(props)},
                  {"required", parse_json(required_json)},
                  {"additionalProperties", false}};
}

template <typename N, typename Cfg>
auto builder_with_opts() {
    return [](const NodeInstance& n, const CompileOptions& o) -> std::unique_ptr<Node> {
        return std::make_unique<N>(Cfg::parse(n.config, o));
    };
}

std::function<std::size_t(const Value&)> fixed(std::size_t n) {
    return [n](const Value&) { return n; };
}

NodeRegistry make_standard() {
    NodeRegistry r;
    const std::string strict = R"("strict":{"type":"boolean"})";

    r.add({"http_in", 0, Category::endpoint,
           schema(R"({"method":{"type":"string","enum":["GET","POST"]},"path":{"type":"string","minLength":1}})",
                  R"(["path"])"),
           fixed(1), [](const NodeInstance& n, const CompileOptions&) -> std::unique_ptr<Node> {
               HttpInConfig::parse(n.config);
               return std::make_unique<HttpInNode>();
           }});
    r.add({"http_response", 1, Category::endpoint, schema("{}"), fixed(0),
           [](const NodeInstance&, const CompileOptions&) -> std::unique_ptr<Node> {
               return std::make_unique<HttpResponseNode>();
           }});
    r.add({"init", 1, Category::protocol, schema("{}"), fixed(1),
           [](const NodeInstance&, const CompileOptions&) -> std::unique_ptr<Node> {
               return std::make_unique<InitNode>();
           }});
    r.add({"finish", 1, Category::protocol, schema("{}"), fixed(1),
           [](const NodeInstance&, const CompileOptions&) -> std::unique_ptr<Node> {
               return std::make_unique<FinishNode>();
           }});
    r.add({"switch", 1, Category::logic,
           schema(R"({"property":{"type":"string","minLength":1},
                      "rules":{"type":"array","items":{"type":"object","properties":{
                          "operator":{"type":"string","enum":["equals","not_equals","contains","is_set"]},
                          "value":{"type":["string","null"]}},"required":["operator"],"additionalProperties":false}},
                      "otherwise":{"type":"boolean"},"check_all":{"type":"boolean"}})",
                  R"(["property"])"),
           [](const Value& cfg) { return SwitchConfig::parse(cfg).port_count(); },
           [](const NodeInstance& n, const CompileOptions&) -> std::unique_ptr<Node> {
               return std::make_unique<SwitchNode>(SwitchConfig::parse(n.config));
           }});
    r.add({"template", 1, Category::transform,
           schema(R"({"template":{"type":"string"},"target":{"type":"string","minLength":1},
                      "mode":{"type":"string","enum":["raw","url_component"]},)" + strict + "}",
                  R"(["template"])"),
           fixed(1), builder_with_opts<TemplateNode, TemplateConfig>()});
    r.add({"http_request", 1, Category::network,
           schema(R"({"method":{"type":"string","enum":["GET","POST"]},
                      "url_from":{"type":"string","enum":["payload","config"]},
                      "url":{"type":"string"},"headers":{"type":"object"},
                      "timeout_ms":{"type":"integer","minimum":1,"maximum":3600000},
                      "body_from":{"type":"string","minLength":1}})"),
           fixed(1), builder_with_opts<HttpRequestNode, HttpRequestConfig>()});
    r.add({"sendtext", 1, Category::emit, schema(R"({"text":{"type":"string"},)" + strict + "}", R"(["text"])"),
           fixed(1), builder_with_opts<SendTextNode, SendTextConfig>()});
    r.add({"sendbuttons", 1, Category::emit,
           schema(R"({"text":{"type":"string"},
                      "buttons":{"type":"array","minItems":1,"items":{"type":"object","properties":{
                          "title":{"type":"string","minLength":1},"payload":{"type":"string"}},
                          "required":["title","payload"],"additionalProperties":false}},)" + strict + "}",
                  R"(["buttons"])"),
           fixed(1), builder_with_opts<SendButtonsNode, SendButtonsConfig>()});
    r.add({"sendextra", 1, Category::emit,
           schema(R"({"kind":{"type":"string","enum":["image","attachment"]},"media":{"type":"string"},)" + strict +
                      "}",
                  R"(["kind","media"])"),
           fixed(1), builder_with_opts<SendExtraNode, SendExtraConfig>()});
    r.add({"setslots", 1, Category::emit,
           schema(R"({"assignments":{"type":"array","minItems":1,"items":{"type":"object","properties":{
                          "name":{"type":"string","minLength":1},"value":{"type":["string","null"]}},
                          "required":["name","value"],"additionalProperties":false}},)" + strict + "}",
                  R"(["assignments"])"),
           fixed(1), builder_with_opts<SetSlotsNode, SetSlotsConfig>()});
    r.add({"debug", 1, Category::diagnostic,
           schema(R"({"select":{"type":"string","enum":["whole_message","path"]},"path":{"type":"string","minLength":1}})"),
           fixed(1), [](const NodeInstance& n, const CompileOptions&) -> std::unique_ptr<Node> {
               return std::make_unique<DebugNode>(DebugConfig::parse(n.config));
           }});
    return r;
}

}  // namespace

const char* category_name(Category c) {
    switch (c) {
        case Category::endpoint: return "endpoint";
        case Category::protocol: return "protocol";
        case Category::logic: return "logic";
        case Category::transform: return "transform";
        case Category::network: return "network";
        case Category::emit: return "emit";
        case Category::diagnostic: return "diagnostic";
    }
    return "?";
}

Value node_spec_to_tree(const NodeSpec& spec) {
    Object o{{"type_name", spec.type_name},
             {"input_arity", spec.input_arity},
             {"category", category_name(spec.category)},
             {"config_schema", spec.config_schema}};
    // Switch arity follows its rules; everything else is fixed.
    if (spec.type_name == "switch") {
        o.set("output_arity", "rules+otherwise");
    } else {
        o.set("output_arity", static_cast<std::int64_t>(spec.output_arity(Value(Object{}))));
    }
    return o;
}

void NodeRegistry::add(NodeSpec spec) {
    std::string key = spec.type_name;
    specs_.insert_or_assign(std::move(key), std::move(spec));
}

const NodeSpec* NodeRegistry::find(std::string_view type_name) const {
    auto it = specs_.find(type_name);
    return it == specs_.end() ? nullptr : &it->second;
}

std::vector<const NodeSpec*> NodeRegistry::specs() const {
    std::vector<const NodeSpec*> out;
    for (const auto& [name, spec] : specs_) out.push_back(&spec);
    return out;
}

const NodeRegistry& NodeRegistry::standard() {
    static const NodeRegistry registry = make_standard();
    return registry;
}

}  // namespace flowfill
