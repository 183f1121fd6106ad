#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flowfill/value.hpp"

// Subset of the chatbot action-server webhook protocol: the request carries
// the action to run plus tracker slots, the response carries bot responses and
// slot events.
namespace flowfill::protocol {

struct Tracker {
    std::string sender_id;
    std::map<std::string, Value> slots;
    std::optional<Value> latest_message;

    friend bool operator==(const Tracker&, const Tracker&) = default;
};

struct ActionRequest {
    std::string next_action;
    std::string sender_id;
    Tracker tracker;
    std::optional<std::string> version;
    Value raw;  // body as received
};

struct Event {
    enum class Kind { slot_set };

    Kind kind = Kind::slot_set;
    std::string name;
    Value value;

    static Event slot_set(std::string name, Value value) { return {Kind::slot_set, std::move(name), std::move(value)}; }

    friend bool operator==(const Event&, const Event&) = default;
};

struct Button {
    std::string title;
    std::string payload;

    friend bool operator==(const Button&, const Button&) = default;
};

struct BotResponse {
    enum class Kind { text, buttons, image, attachment, custom };

    Kind kind = Kind::text;
    std::optional<std::string> text;
    std::optional<std::vector<Button>> buttons;
    std::optional<std::string> media;
    std::optional<Value> custom;

    static BotResponse make_text(std::string text);
    static BotResponse make_buttons(std::string text, std::vector<Button> buttons);
    static BotResponse make_image(std::string url);
    static BotResponse make_attachment(std::string locator);
    static BotResponse make_custom(Value payload);

    friend bool operator==(const BotResponse&, const BotResponse&) = default;
};

struct ActionResponse {
    std::vector<Event> events;
    std::vector<BotResponse> responses;

    friend bool operator==(const ActionResponse&, const ActionResponse&) = default;
};

// Throws ParseError with codes MalformedBody, MissingField or TypeMismatch.
ActionRequest parse_action_request(std::string_view body);
ActionRequest action_request_from_tree(Value tree);

Value action_response_to_tree(const ActionResponse& resp);
std::string serialize_action_response(const ActionResponse& resp);
// Inverse of serialize_action_response. Throws ParseError.
ActionResponse parse_action_response(std::string_view body);
ActionResponse action_response_from_tree(const Value& tree);

Value event_to_tree(const Event& e);
Value bot_response_to_tree(const BotResponse& r);

std::string serialize_error(std::string_view action_name, std::string_view message);

struct ErrorBody {
    std::string action_name;
    std::string error;
};
ErrorBody parse_error_body(std::string_view body);

// Throws Error("InvalidResponse") when a BotResponse breaks its kind invariants.
void check_invariants(const BotResponse& r);

}  // namespace flowfill::protocol
