#include "flowfill/nodes.hpp"

#include <algorithm>

namespace flowfill {

namespace {

const Value* member(const Value& cfg, std::string_view key) {
    const Value* v = cfg.find(key);
    return v && !v->is_null() ? v : nullptr;
}

std::string get_string(const Value& cfg, std::string_view key, std::optional<std::string> fallback = std::nullopt) {
    const Value* v = member(cfg, key);
    if (!v) {
        if (fallback) return *fallback;
        throw ConfigError(std::string(key), "required");
    }
    if (!v->is_string()) throw ConfigError(std::string(key), "must be a string");
    return v->as_string();
}

bool get_bool(const Value& cfg, std::string_view key, bool fallback) {
    const Value* v = member(cfg, key);
    if (!v) return fallback;
    if (!v->is_bool()) throw ConfigError(std::string(key), "must be a boolean");
    return v->as_bool();
}

tmpl::Path get_path(const Value& cfg, std::string_view key, std::optional<std::string> fallback = std::nullopt) {
    std::string text = get_string(cfg, key, std::move(fallback));
    try {
        return tmpl::Path::parse(text);
    } catch (const ParseError& e) {
        throw ConfigError(std::string(key), e.what());
    }
}

tmpl::TemplateString compile_template(const std::string& text, const std::string& field, const CompileOptions& opts) {
    tmpl::TemplateString tpl;
    try {
        tpl = tmpl::parse_template(text);
    } catch (const ParseError& e) {
        throw ConfigError(field, e.code() + ": " + e.what());
    }
    std::vector<tmpl::Path> unbound;
    tpl = tmpl::bind_literals(tpl, "vars", opts.vars, &unbound);
    if (!unbound.empty()) throw ConfigError(field, "unknown flow variable " + unbound.front().str());
    return tpl;
}

tmpl::TemplateString get_template(const Value& cfg, std::string_view key, const CompileOptions& opts,
                                  std::optional<std::string> fallback = std::nullopt) {
    return compile_template(get_string(cfg, key, std::move(fallback)), std::string(key), opts);
}

bool strict_flag(const Value& cfg, const CompileOptions& opts) {
    return get_bool(cfg, "strict", false) || opts.force_strict;
}

// Writes `v` at `steps[from..]` below `root`, creating maps on the way.
void assign(Value& root, const std::vector<tmpl::PathStep>& steps, std::size_t from, Value v) {
    Value* cur = &root;
    for (std::size_t i = from; i < steps.size(); ++i) {
        const auto& step = steps[i];
        if (cur->is_array() && step.index && *step.index < cur->as_array().size()) {
            cur = &cur->as_array()[*step.index];
            continue;
        }
        if (!cur->is_object()) *cur = Object{};
        cur = &cur->as_object()[step.key];
    }
    *cur = std::move(v);
}

void check_target(const tmpl::Path& target) {
    const std::string& head = target.head();
    if (head == "payload") return;
    if (head == "slots" && target.steps().size() >= 2) return;
    throw ConfigError("target", "must be payload[.path] or slots.<name>");
}

void write_target(MessageObject& msg, const tmpl::Path& target, Value v) {
    const auto& steps = target.steps();
    if (target.head() == "payload") {
        assign(msg.payload, steps, 1, std::move(v));
        return;
    }
    Value& slot = msg.slots[steps[1].key];
    assign(slot, steps, 2, std::move(v));
}

std::string render_into(const tmpl::TemplateString& tpl, const Value& tree, tmpl::Mode mode, bool strict,
                        std::vector<tmpl::Path>* missing) {
    try {
        auto r = tmpl::render_ex(tpl, tree, mode, strict);
        if (missing) missing->insert(missing->end(), r.missing.begin(), r.missing.end());
        return std::move(r.text);
    } catch (const tmpl::MissingValue& e) {
        throw NodeError("MissingValue", e.what());
    }
}

}  // namespace

// --- configs -------------------------------------------------------------

HttpInConfig HttpInConfig::parse(const Value& cfg) {
    HttpInConfig c;
    c.method = get_string(cfg, "method", "POST");
    if (c.method != "POST" && c.method != "GET") throw ConfigError("method", "must be GET or POST");
    c.path = get_string(cfg, "path");
    if (c.path.empty() || c.path.front() != '/') throw ConfigError("path", "must start with '/'");
    if (c.path == "/health" || c.path == "/actions" || c.path.rfind("/admin", 0) == 0) {
        throw ConfigError("path", c.path + " is reserved by the server");
    }
    return c;
}

SwitchConfig SwitchConfig::parse(const Value& cfg) {
    SwitchConfig c;
    c.property = get_path(cfg, "property");
    c.otherwise = get_bool(cfg, "otherwise", false);
    c.check_all = get_bool(cfg, "check_all", false);
    const Value* rules = member(cfg, "rules");
    if (rules && !rules->is_array()) throw ConfigError("rules", "must be a list");
    if (rules) {
        std::size_t i = 0;
        for (const Value& r : rules->as_array()) {
            std::string path = "rules." + std::to_string(i++);
            if (!r.is_object()) throw ConfigError(path, "must be an object");
            SwitchRule rule;
            std::string op = get_string(r, "operator", "equals");
            if (op == "equals") rule.op = SwitchRule::Op::equals;
            else if (op == "not_equals") rule.op = SwitchRule::Op::not_equals;
            else if (op == "contains") rule.op = SwitchRule::Op::contains;
            else if (op == "is_set") rule.op = SwitchRule::Op::is_set;
            else throw ConfigError(path + ".operator", "unknown operator " + op);
            if (const Value* v = member(r, "value")) {
                if (!v->is_string()) throw ConfigError(path + ".value", "must be a string");
                rule.value = v->as_string();
            }
            if (rule.op != SwitchRule::Op::is_set && !rule.value) throw ConfigError(path + ".value", "required");
            c.rules.push_back(std::move(rule));
        }
    }
    if (c.rules.empty() && !c.otherwise) throw ConfigError("rules", "needs at least one rule or otherwise=true");
    return c;
}

TemplateConfig TemplateConfig::parse(const Value& cfg, const CompileOptions& opts) {
    TemplateConfig c;
    c.text = get_template(cfg, "template", opts);
    c.target = get_path(cfg, "target", "payload");
    check_target(c.target);
    std::string mode = get_string(cfg, "mode", "raw");
    if (mode == "raw") c.mode = tmpl::Mode::raw;
    else if (mode == "url_component") c.mode = tmpl::Mode::url_component;
    else throw ConfigError("mode", "must be raw or url_component");
    c.strict = strict_flag(cfg, opts);
    return c;
}

HttpRequestConfig HttpRequestConfig::parse(const Value& cfg, const CompileOptions& opts) {
    HttpRequestConfig c;
    c.method = get_string(cfg, "method", "GET");
    if (c.method != "GET" && c.method != "POST") throw ConfigError("method", "must be GET or POST");
    std::string from = get_string(cfg, "url_from", "payload");
    if (from == "payload") c.url_from = UrlFrom::payload;
    else if (from == "config") c.url_from = UrlFrom::config;
    else throw ConfigError("url_from", "must be payload or config");
    if (member(cfg, "url")) c.url = get_template(cfg, "url", opts);
    if (c.url_from == UrlFrom::config && !c.url) throw ConfigError("url", "required when url_from is config");
    if (const Value* h = member(cfg, "headers")) {
        if (!h->is_object()) throw ConfigError("headers", "must be an object");
        for (const auto& [k, v] : h->as_object()) {
            if (!v.is_string()) throw ConfigError("headers." + k, "must be a string");
            c.headers[k] = v.as_string();
        }
    }
    if (const Value* t = member(cfg, "timeout_ms")) {
        if (!t->is_number() || !t->as_number().is_integer() || t->as_number().to_double() <= 0 ||
            t->as_number().to_double() > 3600000) {
            throw ConfigError("timeout_ms", "must be a positive integer (ms)");
        }
        c.timeout_ms = static_cast<int>(t->as_number().to_double());
    }
    if (member(cfg, "body_from")) c.body_from = get_path(cfg, "body_from");
    return c;
}

SendTextConfig SendTextConfig::parse(const Value& cfg, const CompileOptions& opts) {
    return {get_template(cfg, "text", opts), strict_flag(cfg, opts)};
}

SendButtonsConfig SendButtonsConfig::parse(const Value& cfg, const CompileOptions& opts) {
    SendButtonsConfig c;
    c.text = get_template(cfg, "text", opts, "");
    c.strict = strict_flag(cfg, opts);
    const Value* buttons = member(cfg, "buttons");
    if (!buttons || !buttons->is_array() || buttons->as_array().empty()) {
        throw ConfigError("buttons", "needs at least one button");
    }
    std::size_t i = 0;
    for (const Value& b : buttons->as_array()) {
        std::string path = "buttons." + std::to_string(i++);
        if (!b.is_object()) throw ConfigError(path, "must be an object");
        std::string title = get_string(b, "title");
        if (title.empty()) throw ConfigError(path + ".title", "must not be empty");
        c.buttons.push_back({compile_template(title, path + ".title", opts),
                             compile_template(get_string(b, "payload"), path + ".payload", opts)});
    }
    return c;
}

SendExtraConfig SendExtraConfig::parse(const Value& cfg, const CompileOptions& opts) {
    SendExtraConfig c;
    std::string kind = get_string(cfg, "kind");
    if (kind == "image") c.kind = Kind::image;
    else if (kind == "attachment") c.kind = Kind::attachment;
    else throw ConfigError("kind", "must be image or attachment");
    c.media = get_template(cfg, "media", opts);
    c.strict = strict_flag(cfg, opts);
    return c;
}

SetSlotsConfig SetSlotsConfig::parse(const Value& cfg, const CompileOptions& opts) {
    SetSlotsConfig c;
    c.strict = strict_flag(cfg, opts);
    const Value* list = member(cfg, "assignments");
    if (!list || !list->is_array() || list->as_array().empty()) {
        throw ConfigError("assignments", "needs at least one assignment");
    }
    std::size_t i = 0;
    for (const Value& a : list->as_array()) {
        std::string path = "assignments." + std::to_string(i++);
        if (!a.is_object()) throw ConfigError(path, "must be an object");
        SlotAssignment s;
        s.name = get_string(a, "name");
        if (s.name.empty()) throw ConfigError(path + ".name", "must not be empty");
        const Value* v = a.find("value");
        if (v && v->is_string()) {
            s.value = compile_template(v->as_string(), path + ".value", opts);
        } else if (v && !v->is_null()) {
            throw ConfigError(path + ".value", "must be a template string or null");
        }
        c.assignments.push_back(std::move(s));
    }
    return c;
}

DebugConfig DebugConfig::parse(const Value& cfg) {
    DebugConfig c;
    std::string select = get_string(cfg, "select", "whole_message");
    if (select == "whole_message") {
        c.select = Select::whole_message;
    } else if (select == "path") {
        c.select = Select::path;
        c.path = get_path(cfg, "path");
    } else {
        throw ConfigError("select", "must be whole_message or path");
    }
    return c;
}

// --- behaviours ------------------------------------------------------------

MessageObject init_node(const protocol::ActionRequest& request, std::string msg_id) {
    MessageObject msg;
    msg.payload = request.raw;
    msg.action = request.next_action;
    msg.slots = request.tracker.slots;
    msg.request = request.raw;
    msg.msg_id = std::move(msg_id);
    return msg;
}

protocol::ActionResponse finish_node(const MessageObject& msg) {
    return {msg.collected_events, msg.collected_responses};
}

bool switch_rule_matches(const SwitchRule& rule, const Value* property) {
    bool has = property && !property->is_null();
    switch (rule.op) {
        case SwitchRule::Op::is_set: return has;
        case SwitchRule::Op::equals: return has && tmpl::stringify(*property) == rule.value.value_or("");
        case SwitchRule::Op::not_equals: return !(has && tmpl::stringify(*property) == rule.value.value_or(""));
        case SwitchRule::Op::contains:
            return has && tmpl::stringify(*property).find(rule.value.value_or("")) != std::string::npos;
    }
    return false;
}

std::vector<std::size_t> switch_route(const SwitchConfig& cfg, const MessageObject& msg) {
    Value tree = message_to_tree(msg);
    const Value* property = tmpl::resolve_path(tree, cfg.property);
    std::vector<std::size_t> ports;
    for (std::size_t i = 0; i < cfg.rules.size(); ++i) {
        if (!switch_rule_matches(cfg.rules[i], property)) continue;
        ports.push_back(i);
        if (!cfg.check_all) break;
    }
    if (ports.empty() && cfg.otherwise) ports.push_back(cfg.rules.size());
    return ports;
}

MessageObject template_node(const TemplateConfig& cfg, MessageObject msg, std::vector<tmpl::Path>* missing) {
    std::string text = render_into(cfg.text, message_to_tree(msg), cfg.mode, cfg.strict, missing);
    write_target(msg, cfg.target, Value(std::move(text)));
    return msg;
}

MessageObject http_request_node(const HttpRequestConfig& cfg, MessageObject msg, HttpClient& http) {
    HttpCall call;
    call.method = cfg.method;
    call.headers = cfg.headers;
    call.timeout = std::chrono::milliseconds(cfg.timeout_ms);

    Value tree;
    auto ensure_tree = [&]() -> const Value& {
        if (tree.is_null()) tree = message_to_tree(msg);
        return tree;
    };

    if (cfg.url_from == HttpRequestConfig::UrlFrom::config) {
        call.url = render_into(*cfg.url, ensure_tree(), tmpl::Mode::url_component, false, nullptr);
    } else if (msg.payload.is_string()) {
        call.url = msg.payload.as_string();
    }
    if (call.url.empty()) throw NodeError("NoUrl", "no URL available from " + std::string(cfg.url_from == HttpRequestConfig::UrlFrom::config ? "config" : "payload"));

    if (cfg.body_from) {
        const Value* body = tmpl::resolve_path(ensure_tree(), *cfg.body_from);
        if (body) {
            call.body = body->is_string() ? body->as_string() : to_json(*body);
            call.content_type = body->is_string() ? "text/plain" : "application/json";
        }
    }

    HttpReply reply = http.send(call);
    msg.status_code = reply.status;
    try {
        msg.payload = parse_json(reply.body);
    } catch (const ParseError&) {
        msg.payload = Value(std::move(reply.body));
    }
    return msg;
}

MessageObject sendtext_node(const SendTextConfig& cfg, MessageObject msg, std::vector<tmpl::Path>* missing) {
    std::string text = render_into(cfg.text, message_to_tree(msg), tmpl::Mode::raw, cfg.strict, missing);
    msg.collected_responses.push_back(protocol::BotResponse::make_text(std::move(text)));
    return msg;
}

MessageObject sendbuttons_node(const SendButtonsConfig& cfg, MessageObject msg, std::vector<tmpl::Path>* missing) {
    Value tree = message_to_tree(msg);
    std::string text = render_into(cfg.text, tree, tmpl::Mode::raw, cfg.strict, missing);
    std::vector<protocol::Button> buttons;
    for (const auto& b : cfg.buttons) {
        protocol::Button out{render_into(b.title, tree, tmpl::Mode::raw, cfg.strict, missing),
                             render_into(b.payload, tree, tmpl::Mode::raw, cfg.strict, missing)};
        if (out.title.empty()) throw NodeError("InvalidResponse", "button title rendered empty");
        buttons.push_back(std::move(out));
    }
    msg.collected_responses.push_back(protocol::BotResponse::make_buttons(std::move(text), std::move(buttons)));
    return msg;
}

MessageObject sendextra_node(const SendExtraConfig& cfg, MessageObject msg, std::vector<tmpl::Path>* missing) {
    std::string media = render_into(cfg.media, message_to_tree(msg), tmpl::Mode::raw, cfg.strict, missing);
    msg.collected_responses.push_back(cfg.kind == SendExtraConfig::Kind::image
                                          ? protocol::BotResponse::make_image(std::move(media))
                                          : protocol::BotResponse::make_attachment(std::move(media)));
    return msg;
}

MessageObject setslots_node(const SetSlotsConfig& cfg, MessageObject msg, std::vector<tmpl::Path>* missing) {
    Value tree = message_to_tree(msg);
    for (const auto& a : cfg.assignments) {
        Value v = a.value ? Value(render_into(*a.value, tree, tmpl::Mode::raw, cfg.strict, missing)) : Value(nullptr);
        msg.collected_events.push_back(protocol::Event::slot_set(a.name, std::move(v)));
    }
    return msg;
}

Value debug_node(const DebugConfig& cfg, const MessageObject& msg) {
    Value tree = message_to_tree(msg);
    if (cfg.select == DebugConfig::Select::whole_message) return tree;
    if (const Value* v = tmpl::resolve_path(tree, *cfg.path)) return *v;
    return Object{{"absent", true}, {"path", cfg.path->str()}};
}

const char* level_name(Level level) {
    switch (level) {
        case Level::info: return "info";
        case Level::warning: return "warning";
        case Level::error: return "error";
    }
    return "info";
}

}  // namespace flowfill
