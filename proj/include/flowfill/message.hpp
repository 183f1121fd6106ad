#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flowfill/protocol.hpp"
#include "flowfill/value.hpp"

namespace flowfill {

// The value that travels along wires. Responses and events accumulate here
// and are read back by the finish node, so every branch carries its own.
struct MessageObject {
    Value payload;
    std::optional<std::string> action;
    std::map<std::string, Value> slots;
    std::optional<Value> request;
    std::vector<protocol::BotResponse> collected_responses;
    std::vector<protocol::Event> collected_events;
    std::optional<int> status_code;
    std::string msg_id;
    // Set by finish; consumed by http_response.
    std::optional<protocol::ActionResponse> response;

    friend bool operator==(const MessageObject&, const MessageObject&) = default;
};

// Tree view used by templates, switch properties and debug output:
// {payload, action, slots, request, status_code, msg_id, responses, events}.
// Absent optionals are omitted.
Value message_to_tree(const MessageObject& msg);
MessageObject message_from_tree(const Value& tree);

}  // namespace flowfill
