#include "flowfill/protocol.hpp"

namespace flowfill::protocol {

namespace {

[[noreturn]] void missing(const std::string& path) {
    throw ParseError("MissingField", path, "required field is missing");
}

[[noreturn]] void mismatch(const std::string& path, const char* expected, const Value& got) {
    throw ParseError("TypeMismatch", path,
                     std::string("expected ") + expected + ", got " + kind_name(got.kind()));
}

const std::string& require_string(const Value& parent, const std::string& key, const std::string& path) {
    const Value* v = parent.find(key);
    if (!v) missing(path);
    if (!v->is_string()) mismatch(path, "string", *v);
    return v->as_string();
}

std::optional<std::string> optional_string(const Value& parent, const std::string& key, const std::string& path) {
    const Value* v = parent.find(key);
    if (!v || v->is_null()) return std::nullopt;
    if (!v->is_string()) mismatch(path, "string", *v);
    return v->as_string();
}

}  // namespace

BotResponse BotResponse::make_text(std::string text) {
    BotResponse r;
    r.kind = Kind::text;
    r.text = std::move(text);
    return r;
}

BotResponse BotResponse::make_buttons(std::string text, std::vector<Button> buttons) {
    BotResponse r;
    r.kind = Kind::buttons;
    r.text = std::move(text);
    r.buttons = std::move(buttons);
    return r;
}

BotResponse BotResponse::make_image(std::string url) {
    BotResponse r;
    r.kind = Kind::image;
    r.media = std::move(url);
    return r;
}

BotResponse BotResponse::make_attachment(std::string locator) {
    BotResponse r;
    r.kind = Kind::attachment;
    r.media = std::move(locator);
    return r;
}

BotResponse BotResponse::make_custom(Value payload) {
    BotResponse r;
    r.kind = Kind::custom;
    r.custom = std::move(payload);
    return r;
}

void check_invariants(const BotResponse& r) {
    auto fail = [](const std::string& why) { throw Error("InvalidResponse", why); };
    using K = BotResponse::Kind;
    bool want_text = r.kind == K::text || r.kind == K::buttons;
    bool want_buttons = r.kind == K::buttons;
    bool want_media = r.kind == K::image || r.kind == K::attachment;
    bool want_custom = r.kind == K::custom;
    if (r.text.has_value() != want_text) fail("text presence does not match response kind");
    if (r.buttons.has_value() != want_buttons) fail("buttons presence does not match response kind");
    if (r.media.has_value() != want_media) fail("media presence does not match response kind");
    if (r.custom.has_value() != want_custom) fail("custom presence does not match response kind");
    if (r.buttons) {
        if (r.buttons->empty()) fail("buttons list is empty");
        for (const auto& b : *r.buttons) {
            if (b.title.empty()) fail("button title is empty");
        }
    }
}

ActionRequest action_request_from_tree(Value tree) {
    if (!tree.is_object()) mismatch("", "object", tree);

    ActionRequest req;
    req.next_action = require_string(tree, "next_action", "next_action");
    if (req.next_action.empty()) {
        throw ParseError("MissingField", "next_action", "action name is empty");
    }
    req.sender_id = require_string(tree, "sender_id", "sender_id");
    req.version = optional_string(tree, "version", "version");

    const Value* tracker = tree.find("tracker");
    if (!tracker) missing("tracker");
    if (!tracker->is_object()) mismatch("tracker", "object", *tracker);

    req.tracker.sender_id = optional_string(*tracker, "sender_id", "tracker.sender_id").value_or(req.sender_id);
    if (const Value* slots = tracker->find("slots"); slots && !slots->is_null()) {
        if (!slots->is_object()) mismatch("tracker.slots", "object", *slots);
        for (const auto& [name, value] : slots->as_object()) req.tracker.slots[name] = value;
    }
    if (const Value* latest = tracker->find("latest_message")) req.tracker.latest_message = *latest;

    req.raw = std::move(tree);
    return req;
}

ActionRequest parse_action_request(std::string_view body) {
    return action_request_from_tree(parse_json(body));
}

Value event_to_tree(const Event& e) {
    return Object{{"event", "slot"}, {"name", e.name}, {"value", e.value}};
}

Value bot_response_to_tree(const BotResponse& r) {
    Object o;
    switch (r.kind) {
        case BotResponse::Kind::text:
            o.set("text", r.text.value_or(""));
            break;
        case BotResponse::Kind::buttons: {
            o.set("text", r.text.value_or(""));
            Array buttons;
            for (const auto& b : r.buttons.value_or(std::vector<Button>{})) {
                buttons.push_back(Object{{"title", b.title}, {"payload", b.payload}});
            }
            o.set("buttons", std::move(buttons));
            break;
        }
        case BotResponse::Kind::image:
            o.set("image", r.media.value_or(""));
            break;
        case BotResponse::Kind::attachment:
            o.set("attachment", r.media.value_or(""));
            break;
        case BotResponse::Kind::custom:
            o.set("custom", r.custom.value_or(Value()));
            break;
    }
    return o;
}

Value action_response_to_tree(const ActionResponse& resp) {
    Array events;
    for (const auto& e : resp.events) events.push_back(event_to_tree(e));
    Array responses;
    for (const auto& r : resp.responses) responses.push_back(bot_response_to_tree(r));
    return Object{{"events", std::move(events)}, {"responses", std::move(responses)}};
}

std::string serialize_action_response(const ActionResponse& resp) {
    return to_json(action_response_to_tree(resp));
}

ActionResponse action_response_from_tree(const Value& tree) {
    if (!tree.is_object()) mismatch("", "object", tree);
    ActionResponse resp;

    if (const Value* events = tree.find("events")) {
        if (!events->is_array()) mismatch("events", "array", *events);
        std::size_t i = 0;
        for (const Value& e : events->as_array()) {
            std::string path = "events." + std::to_string(i++);
            if (!e.is_object()) mismatch(path, "object", e);
            const std::string& kind = require_string(e, "event", path + ".event");
            if (kind != "slot") throw ParseError("UnsupportedEvent", path + ".event", "unsupported event kind " + kind);
            Event ev;
            ev.name = require_string(e, "name", path + ".name");
            if (const Value* v = e.find("value")) ev.value = *v;
            resp.events.push_back(std::move(ev));
        }
    }

    if (const Value* responses = tree.find("responses")) {
        if (!responses->is_array()) mismatch("responses", "array", *responses);
        std::size_t i = 0;
        for (const Value& r : responses->as_array()) {
            std::string path = "responses." + std::to_string(i++);
            if (!r.is_object()) mismatch(path, "object", r);
            BotResponse out;
            if (const Value* buttons = r.find("buttons")) {
                if (!buttons->is_array()) mismatch(path + ".buttons", "array", *buttons);
                std::vector<Button> list;
                std::size_t j = 0;
                for (const Value& b : buttons->as_array()) {
                    std::string bpath = path + ".buttons." + std::to_string(j++);
                    list.push_back({require_string(b, "title", bpath + ".title"),
                                    require_string(b, "payload", bpath + ".payload")});
                }
                out = BotResponse::make_buttons(optional_string(r, "text", path + ".text").value_or(""), std::move(list));
            } else if (r.find("image")) {
                out = BotResponse::make_image(require_string(r, "image", path + ".image"));
            } else if (r.find("attachment")) {
                out = BotResponse::make_attachment(require_string(r, "attachment", path + ".attachment"));
            } else if (const Value* custom = r.find("custom")) {
                out = BotResponse::make_custom(*custom);
            } else if (r.find("text")) {
                out = BotResponse::make_text(require_string(r, "text", path + ".text"));
            } else {
                throw ParseError("MissingField", path, "response has no recognised content");
            }
            resp.responses.push_back(std::move(out));
        }
    }
    return resp;
}

ActionResponse parse_action_response(std::string_view body) {
    return action_response_from_tree(parse_json(body));
}

std::string serialize_error(std::string_view action_name, std::string_view message) {
    return to_json(Object{{"action_name", action_name}, {"error", message}});
}

ErrorBody parse_error_body(std::string_view body) {
    Value tree = parse_json(body);
    if (!tree.is_object()) mismatch("", "object", tree);
    return {require_string(tree, "action_name", "action_name"), require_string(tree, "error", "error")};
}

}  // namespace flowfill::protocol
