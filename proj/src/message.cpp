#include "flowfill/message.hpp"

namespace flowfill {

Value message_to_tree(const MessageObject& msg) {
    Object tree;
    tree.set("payload", msg.payload);
    if (msg.action) tree.set("action", *msg.action);
    Object slots;
    for (const auto& [name, value] : msg.slots) slots.set(name, value);
    tree.set("slots", std::move(slots));
    if (msg.request) tree.set("request", *msg.request);
    if (msg.status_code) tree.set("status_code", *msg.status_code);
    tree.set("msg_id", msg.msg_id);
    Array responses;
    for (const auto& r : msg.collected_responses) responses.push_back(protocol::bot_response_to_tree(r));
    tree.set("responses", std::move(responses));
    Array events;
    for (const auto& e : msg.collected_events) events.push_back(protocol::event_to_tree(e));
    tree.set("events", std::move(events));
    return tree;
}

MessageObject message_from_tree(const Value& tree) {
    if (!tree.is_object()) throw ParseError("TypeMismatch", "", "message tree must be an object");
    MessageObject msg;
    if (const Value* v = tree.find("payload")) msg.payload = *v;
    if (const Value* v = tree.find("action"); v && v->is_string()) msg.action = v->as_string();
    if (const Value* v = tree.find("slots"); v && v->is_object()) {
        for (const auto& [name, value] : v->as_object()) msg.slots[name] = value;
    }
    if (const Value* v = tree.find("request")) msg.request = *v;
    if (const Value* v = tree.find("status_code"); v && v->is_number()) {
        msg.status_code = static_cast<int>(v->as_number().to_double());
    }
    if (const Value* v = tree.find("msg_id"); v && v->is_string()) msg.msg_id = v->as_string();

    Object acc;
    if (const Value* v = tree.find("responses")) acc.set("responses", *v);
    if (const Value* v = tree.find("events")) acc.set("events", *v);
    auto collected = protocol::action_response_from_tree(acc);
    msg.collected_responses = std::move(collected.responses);
    msg.collected_events = std::move(collected.events);
    return msg;
}

}  // namespace flowfill
