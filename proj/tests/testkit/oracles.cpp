#include "testkit/oracles.hpp"

#include <json.hpp>

#include <map>
#include <set>

namespace testkit::oracle {

using namespace flowfill;
using ojson = nlohmann::ordered_json;

namespace {

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
    return items[std::uniform_int_distribution<std::size_t>(0, items.size() - 1)(rng)];
}

std::size_t upto(Rng& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n)(rng);
}

bool coin(Rng& rng, double p = 0.5) {
    return std::bernoulli_distribution(p)(rng);
}

// A generated leaf together with the text it must render as. `json` is empty
// when the value cannot be expressed exactly through nlohmann (decimals whose
// lexeme would change), which excludes its containers from text checks.
struct Leaf {
    Value value;
    std::string text;
    std::optional<ojson> json;
};

Leaf random_leaf(Rng& rng) {
    switch (upto(rng, 5)) {
        case 0: {
            std::string s = random_text(rng);
            return {Value(s), s, ojson(s)};
        }
        case 1: {
            std::int64_t n = std::uniform_int_distribution<std::int64_t>(-100000, 100000)(rng);
            return {Value(n), std::to_string(n), ojson(n)};
        }
        case 2: {
            bool b = coin(rng);
            return {Value(b), b ? "true" : "false", ojson(b)};
        }
        case 3: return {Value(nullptr), "", ojson(nullptr)};
        default: {
            static const std::vector<std::pair<std::string, std::string>> decimals = {
                {"2.50", "2.5"}, {"0.1", "0.1"}, {"1e3", "1000"}, {"-7.25", "-7.25"}, {"1.5E2", "150"}, {"3.0", "3"}};
            const auto& [lexeme, text] = pick(rng, decimals);
            return {Value::number_text(lexeme), text, std::nullopt};
        }
    }
}

struct Known {
    std::vector<std::string> steps;
    std::string text;
};

// Builds a random object tree and records every reachable path with its
// expected rendering.
struct DataBuilder {
    Rng& rng;
    std::vector<Known> known;

    std::optional<ojson> build(Value& out, std::vector<std::string>& path, int depth) {
        int choice = depth <= 0 ? 0 : static_cast<int>(upto(rng, 4));
        if (choice <= 2) {
            Leaf leaf = random_leaf(rng);
            out = leaf.value;
            known.push_back({path, leaf.text});
            return leaf.json;
        }
        std::optional<ojson> json;
        if (choice == 3) {
            Array arr;
            ojson j = ojson::array();
            bool exact = true;
            std::size_t n = upto(rng, 3);
            for (std::size_t i = 0; i < n; ++i) {
                Value child;
                path.push_back(std::to_string(i));
                auto cj = build(child, path, depth - 1);
                path.pop_back();
                arr.push_back(std::move(child));
                if (cj) j.push_back(*cj);
                else exact = false;
            }
            out = std::move(arr);
            if (exact) json = j;
        } else {
            Object obj;
            ojson j = ojson::object();
            bool exact = true;
            std::size_t n = upto(rng, 3);
            for (std::size_t i = 0; i < n; ++i) {
                std::string key = random_identifier(rng);
                if (obj.contains(key)) continue;
                Value child;
                path.push_back(key);
                auto cj = build(child, path, depth - 1);
                path.pop_back();
                obj.set(key, std::move(child));
                if (cj) j[key] = *cj;
                else exact = false;
            }
            out = std::move(obj);
            if (exact) json = j;
        }
        if (json) known.push_back({path, json->dump()});
        return json;
    }
};

std::string spaces(Rng& rng) {
    return std::string(coin(rng, 0.2) ? upto(rng, 2) : 0, ' ');
}

std::string placeholder_source(Rng& rng, const std::vector<std::string>& steps) {
    std::string s = "{{" + spaces(rng);
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (i) s += spaces(rng) + "." + spaces(rng);
        s += steps[i];
    }
    return s + spaces(rng) + "}}";
}

}  // namespace

std::string random_literal(Rng& rng, std::size_t max_len) {
    static const std::vector<std::string> atoms = {"a", "Z", "9", " ", "-", "_", ".", "~", "/", "?", "&", "=", "%",
                                                   "+", "#", ":", "\"", "\\", "\n", "\xc3\xa9", "\xe2\x82\xac", "}"};
    std::string s;
    std::size_t n = upto(rng, max_len);
    for (std::size_t i = 0; i < n; ++i) s += pick(rng, atoms);
    return s;
}

bool is_url_safe(const std::string& text) {
    auto unreserved = [](unsigned char c) {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '.' ||
               c == '_' || c == '~';
    };
    auto hex = [](unsigned char c) { return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'F'); };
    for (std::size_t i = 0; i < text.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (unreserved(c)) continue;
        if (c == '%' && i + 2 < text.size() && hex(text[i + 1]) && hex(text[i + 2])) {
            i += 2;
            continue;
        }
        return false;
    }
    return true;
}

TemplateCase random_template_case(Rng& rng) {
    TemplateCase c;
    DataBuilder builder{rng, {}};
    Object root;
    std::size_t keys = 1 + upto(rng, 3);
    for (std::size_t i = 0; i < keys; ++i) {
        std::string key = random_identifier(rng);
        if (root.contains(key)) continue;
        std::vector<std::string> path{key};
        Value child;
        builder.build(child, path, 3);
        root.set(key, std::move(child));
    }
    c.data = std::move(root);

    std::size_t pieces = upto(rng, 6);
    bool last_literal = false;
    for (std::size_t i = 0; i < pieces; ++i) {
        int kind = static_cast<int>(upto(rng, 19));
        if (kind < 8 && !last_literal) {
            std::string lit = random_literal(rng);
            c.source += lit;
            c.expected_raw += lit;
            c.expected_url += lit;
            last_literal = true;
            continue;
        }
        last_literal = false;
        ++c.placeholders;
        if (kind < 17 && !builder.known.empty()) {
            const Known& k = pick(rng, builder.known);
            c.source += placeholder_source(rng, k.steps);
            c.expected_raw += k.text;
            c.expected_url += curl_escape(k.text);
        } else {
            std::vector<std::string> steps{"zz_missing" + std::to_string(upto(rng, 9))};
            if (coin(rng)) steps.push_back(std::to_string(upto(rng, 3)));
            c.source += placeholder_source(rng, steps);
            c.has_missing = true;
        }
    }
    return c;
}

// --- switch -------------------------------------------------------------------

SwitchCase random_switch_case(Rng& rng) {
    SwitchCase c;
    std::optional<std::string> text;  // rendering of the tested property; nullopt = unset

    static const std::vector<std::string> actions = {"action_weather", "action_generalinfo", "x", ""};
    if (coin(rng, 0.85)) c.msg.action = pick(rng, actions);

    int slot_kind = static_cast<int>(upto(rng, 4));
    static const std::vector<std::string> places = {"Berlin", "New York", "berlin"};
    std::string place = pick(rng, places);
    if (slot_kind == 1) c.msg.slots["location"] = nullptr;
    if (slot_kind >= 2) c.msg.slots["location"] = place;

    struct PayloadVariant {
        Value value;
        std::optional<std::string> text;
        std::optional<std::string> k_text;     // payload.k
        std::optional<std::string> zero_text;  // payload.0
    };
    static const std::vector<PayloadVariant> payloads = {
        {Value("Berlin"), "Berlin", std::nullopt, std::nullopt},
        {Value(7), "7", std::nullopt, std::nullopt},
        {Value(true), "true", std::nullopt, std::nullopt},
        {Value(nullptr), std::nullopt, std::nullopt, std::nullopt},
        {Array{Value("a"), Value("b")}, R"(["a","b"])", std::nullopt, "a"},
        {Object{{"k", "v"}}, R"({"k":"v"})", "v", std::nullopt},
        {Object{{"k", 7}}, R"({"k":7})", "7", std::nullopt},
        {Object{{"k", nullptr}}, R"({"k":null})", std::nullopt, std::nullopt},
    };
    const PayloadVariant& pv = pick(rng, payloads);
    c.msg.payload = pv.value;
    c.msg.msg_id = "m.1";

    static const std::vector<std::string> properties = {"action", "slots.location", "payload", "payload.k",
                                                        "payload.0", "missing.path"};
    std::string property = pick(rng, properties);
    if (property == "action") text = c.msg.action;
    if (property == "slots.location" && slot_kind >= 2) text = place;
    if (property == "payload") text = pv.text;
    if (property == "payload.k") text = pv.k_text;
    if (property == "payload.0") text = pv.zero_text;

    static const std::vector<std::string> ops = {"equals", "not_equals", "contains", "is_set"};
    static const std::vector<std::string> pool = {"action_weather", "action_generalinfo", "Berlin", "Ber", "7",
                                                  "true", "", "a", "v", "[\"a\"", "zzz", "x"};
    bool otherwise = coin(rng);
    bool check_all = coin(rng);
    std::size_t n_rules = upto(rng, 4);
    if (n_rules == 0 && !otherwise) n_rules = 1;

    Array rules;
    std::vector<bool> matches;
    for (std::size_t i = 0; i < n_rules; ++i) {
        std::string op = pick(rng, ops);
        std::string value = pick(rng, pool);
        Object rule{{"operator", op}};
        if (op != "is_set" || coin(rng, 0.3)) rule.set("value", value);
        rules.push_back(std::move(rule));

        bool set = text.has_value();
        bool eq = set && *text == value;
        bool m = false;
        if (op == "is_set") m = set;
        if (op == "equals") m = eq;
        if (op == "not_equals") m = !eq;
        if (op == "contains") m = set && text->find(value) != std::string::npos;
        matches.push_back(m);
    }

    for (std::size_t i = 0; i < matches.size(); ++i) {
        if (!matches[i]) continue;
        c.expected_ports.push_back(i);
        if (!check_all) break;
    }
    if (c.expected_ports.empty() && otherwise) c.expected_ports.push_back(n_rules);

    c.config = Object{{"property", property}, {"rules", rules}, {"otherwise", otherwise}, {"check_all", check_all}};
    c.description = to_json(c.config) + " over " + to_json(message_to_tree(c.msg));
    return c;
}

// --- linear flows ---------------------------------------------------------------

namespace {

struct Model {
    Value payload;
    bool payload_is_request = true;
    std::string action;
    std::string sender;
    std::map<std::string, Value> slots;
    Array responses;
    Array events;
};

std::string text_of(const Value& v) {
    if (v.is_null()) return "";
    if (v.is_string()) return v.as_string();
    if (v.is_number()) return v.as_number().text;  // generated numbers are plain integers
    throw std::logic_error("unexpected value in linear model");
}

// Placeholder choices valid in the current state and what they render to.
std::pair<std::string, std::string> random_placeholder(Rng& rng, const Model& m) {
    std::vector<std::string> choices = {"action", "slots.a", "slots.b", "slots.zz", "payload.sender_id"};
    if (!m.payload_is_request) choices.push_back("payload");
    std::string path = pick(rng, choices);
    std::string text;
    if (path == "action") text = m.action;
    if (path == "slots.a" || path == "slots.b") {
        auto it = m.slots.find(path.substr(6));
        if (it != m.slots.end()) text = text_of(it->second);
    }
    if (path == "payload.sender_id" && m.payload_is_request) text = m.sender;
    if (path == "payload") text = m.payload.as_string();
    return {"{{" + path + "}}", text};
}

std::pair<std::string, std::string> random_model_template(Rng& rng, const Model& m) {
    std::string source, rendered;
    std::size_t pieces = 1 + upto(rng, 3);
    for (std::size_t i = 0; i < pieces; ++i) {
        if (coin(rng)) {
            std::string lit = random_literal(rng, 8);
            if (!source.empty() && source.back() == '}' && !lit.empty() && lit.front() == '}') lit.erase(0, 1);
            source += lit;
            rendered += lit;
        } else {
            auto [src, text] = random_placeholder(rng, m);
            source += src;
            rendered += text;
        }
    }
    return {source, rendered};
}

Value model_tree_subset(const Model& m) {
    Object slots;
    for (const auto& [k, v] : m.slots) slots.set(k, v);
    return Object{{"payload", m.payload},
                  {"action", m.action},
                  {"slots", std::move(slots)},
                  {"responses", m.responses},
                  {"events", m.events}};
}

Value resolve_in_model(const Model& m, const std::string& path) {
    if (path == "action") return m.action;
    if (path == "payload") return m.payload;
    if (path == "payload.sender_id" && m.payload_is_request) return m.sender;
    if (path.rfind("slots.", 0) == 0) {
        auto it = m.slots.find(path.substr(6));
        if (it != m.slots.end()) return it->second;
    }
    return Object{{"absent", true}, {"path", path}};
}

NodeInstance make_node(std::string id, std::string type, Value config, std::vector<std::vector<std::string>> wires) {
    NodeInstance n;
    n.id = std::move(id);
    n.type = std::move(type);
    n.config = std::move(config);
    n.wires = std::move(wires);
    return n;
}

}  // namespace

LinearCase random_linear_case(Rng& rng, std::size_t max_middle) {
    LinearCase c;
    Model m;
    m.action = "act_" + random_identifier(rng);
    m.sender = "s_" + random_identifier(rng);

    Object slots;
    for (const char* name : {"a", "b"}) {
        switch (upto(rng, 3)) {
            case 0: break;
            case 1: slots.set(name, nullptr); break;
            case 2: slots.set(name, random_text(rng, 8)); break;
            default: slots.set(name, static_cast<std::int64_t>(upto(rng, 1000))); break;
        }
    }
    for (const auto& [k, v] : slots) m.slots[k] = v;
    c.request = request_tree(m.action, slots, m.sender);
    m.payload = c.request;

    std::size_t count = upto(rng, max_middle);
    c.middle_nodes = count;
    std::vector<NodeInstance> middle;
    for (std::size_t i = 0; i < count; ++i) {
        std::string id = "n" + std::to_string(i + 1);
        switch (upto(rng, 3)) {
            case 0: {
                auto [src, text] = random_model_template(rng, m);
                Object cfg{{"template", src}};
                if (coin(rng, 0.6)) {
                    cfg.set("target", "payload");
                    m.payload = text;
                    m.payload_is_request = false;
                } else {
                    std::string slot = pick(rng, std::vector<std::string>{"a", "b", "c"});
                    cfg.set("target", "slots." + slot);
                    m.slots[slot] = text;
                }
                middle.push_back(make_node(id, "template", cfg, {}));
                break;
            }
            case 1: {
                auto [src, text] = random_model_template(rng, m);
                middle.push_back(make_node(id, "sendtext", Object{{"text", src}}, {}));
                m.responses.push_back(Object{{"text", text}});
                break;
            }
            case 2: {
                Array assignments;
                std::vector<Value> new_events;
                std::size_t n = 1 + upto(rng, 1);
                for (std::size_t k = 0; k < n; ++k) {
                    std::string name = pick(rng, std::vector<std::string>{"a", "b", "location"});
                    if (coin(rng, 0.3)) {
                        assignments.push_back(Object{{"name", name}, {"value", nullptr}});
                        new_events.push_back(Object{{"event", "slot"}, {"name", name}, {"value", nullptr}});
                    } else {
                        auto [src, text] = random_model_template(rng, m);
                        assignments.push_back(Object{{"name", name}, {"value", src}});
                        new_events.push_back(Object{{"event", "slot"}, {"name", name}, {"value", text}});
                    }
                }
                for (auto& e : new_events) m.events.push_back(std::move(e));
                middle.push_back(make_node(id, "setslots", Object{{"assignments", assignments}}, {}));
                break;
            }
            default: {
                DebugExpectation d{id, false, Value()};
                if (coin(rng, 0.4)) {
                    d.whole_message = true;
                    d.body = model_tree_subset(m);
                    middle.push_back(make_node(id, "debug", Object{{"select", "whole_message"}}, {}));
                } else {
                    std::string path = pick(rng, std::vector<std::string>{"action", "slots.a", "payload",
                                                                          "payload.sender_id", "slots.zz"});
                    d.body = resolve_in_model(m, path);
                    middle.push_back(make_node(id, "debug", Object{{"select", "path"}, {"path", path}}, {}));
                }
                c.debug.push_back(std::move(d));
                break;
            }
        }
    }

    std::vector<NodeInstance> nodes;
    nodes.push_back(make_node("in", "http_in", Object{{"method", "POST"}, {"path", "/hook"}}, {{"init"}}));
    nodes.push_back(make_node("init", "init", Object{}, {{middle.empty() ? "fin" : middle.front().id}}));
    for (std::size_t i = 0; i < middle.size(); ++i) {
        middle[i].wires = {{i + 1 < middle.size() ? middle[i + 1].id : "fin"}};
        nodes.push_back(middle[i]);
    }
    nodes.push_back(make_node("fin", "finish", Object{}, {{"out"}}));
    nodes.push_back(make_node("out", "http_response", Object{}, {}));
    c.doc.name = "linear";
    c.doc.nodes = std::move(nodes);

    c.expected_response = Object{{"events", m.events}, {"responses", m.responses}};
    return c;
}

std::string compare_linear(const LinearCase& c, const ExecutionResult& result) {
    if (!result.branch_errors.empty()) {
        return "branch error at " + result.branch_errors.front().node_id + ": " + result.branch_errors.front().message;
    }
    if (!result.terminal) return "no terminal response";
    Value got = parse_json(protocol::serialize_action_response(*result.terminal));
    if (!(got == c.expected_response)) {
        return "response " + to_json(got) + " != expected " + to_json(c.expected_response);
    }
    std::set<std::string> debug_ids;
    for (const auto& d : c.debug) debug_ids.insert(d.node_id);
    std::vector<const DebugEvent*> events;
    for (const auto& e : result.debug_events) {
        if (debug_ids.count(e.node_id) && e.level == Level::info) events.push_back(&e);
    }
    if (events.size() != c.debug.size()) {
        return "expected " + std::to_string(c.debug.size()) + " debug events, got " + std::to_string(events.size());
    }
    for (std::size_t i = 0; i < events.size(); ++i) {
        const DebugExpectation& want = c.debug[i];
        const DebugEvent& e = *events[i];
        if (e.node_id != want.node_id) return "debug event order differs at " + want.node_id;
        if (!want.whole_message) {
            if (!(e.body == want.body)) {
                return "debug " + want.node_id + " body " + to_json(e.body) + " != " + to_json(want.body);
            }
            continue;
        }
        for (const auto& [key, value] : want.body.as_object()) {
            const Value* field = e.body.find(key);
            if (!field || !(*field == value)) {
                return "debug " + want.node_id + " field " + key + " = " + (field ? to_json(*field) : "absent") +
                       ", expected " + to_json(value);
            }
        }
    }
    return "";
}

}  // namespace testkit::oracle
