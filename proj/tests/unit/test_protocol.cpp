#include <doctest.h>

#include "testkit/testkit.hpp"

using namespace flowfill;
using namespace flowfill::protocol;

namespace {

std::string error_code(std::string_view body) {
    try {
        parse_action_request(body);
    } catch (const ParseError& e) {
        return e.code() + "@" + e.path();
    }
    return "ok";
}

}  // namespace

TEST_CASE("request with action and slots") {
    ActionRequest r = parse_action_request(
        R"({"next_action":"action_weather","sender_id":"u1","tracker":{"sender_id":"u1","slots":{"location":"Berlin"}},"version":"2.8.0"})");
    CHECK(r.next_action == "action_weather");
    CHECK(r.sender_id == "u1");
    CHECK(r.tracker.slots.size() == 1);
    CHECK(r.tracker.slots.at("location") == Value("Berlin"));
    CHECK(r.version == "2.8.0");
}

TEST_CASE("minimal request has an empty slot map") {
    ActionRequest r = parse_action_request(R"({"next_action":"x","sender_id":"s","tracker":{"slots":{}}})");
    CHECK(r.tracker.slots.empty());
    CHECK(r.tracker.sender_id == "s");
    CHECK_FALSE(r.version.has_value());
    ActionRequest no_slots = parse_action_request(R"({"next_action":"x","sender_id":"s","tracker":{}})");
    CHECK(no_slots.tracker.slots.empty());
}

TEST_CASE("request errors carry the offending path") {
    CHECK(error_code(R"({"tracker":{}})") == "MissingField@next_action");
    CHECK(error_code(R"({"next_action":"","sender_id":"s","tracker":{}})") == "MissingField@next_action");
    CHECK(error_code(R"({"next_action":"x","tracker":{}})") == "MissingField@sender_id");
    CHECK(error_code(R"({"next_action":"x","sender_id":"s"})") == "MissingField@tracker");
    CHECK(error_code(R"({"next_action":"x","sender_id":"s","tracker":{"slots":[]}})") == "TypeMismatch@tracker.slots");
    CHECK(error_code(R"({"next_action":3,"sender_id":"s","tracker":{}})") == "TypeMismatch@next_action");
    CHECK(error_code(R"([1,2])") == "TypeMismatch@");
    CHECK(error_code("not json") == "MalformedBody@");
}

TEST_CASE("null slot values are kept") {
    ActionRequest r = parse_action_request(
        R"({"next_action":"x","sender_id":"s","tracker":{"slots":{"location":null,"n":1.50}}})");
    CHECK(r.tracker.slots.at("location").is_null());
    CHECK(to_json(r.tracker.slots.at("n")) == "1.50");
}

TEST_CASE("raw keeps the body as received") {
    std::string body =
        R"({"next_action":"x","sender_id":"s","tracker":{"slots":{},"events":[{"event":"action"}],"paused":false},"domain":{"intents":["a"]},"n":1.0})";
    ActionRequest r = parse_action_request(body);
    CHECK(to_json(r.raw) == body);
    CHECK(r.raw == parse_json(body));
}

TEST_CASE("empty response") {
    CHECK(serialize_action_response({}) == R"({"events":[],"responses":[]})");
}

TEST_CASE("slot clearing event") {
    ActionResponse r;
    r.events.push_back(Event::slot_set("location", nullptr));
    CHECK(serialize_action_response(r) == R"({"events":[{"event":"slot","name":"location","value":null}],"responses":[]})");
}

TEST_CASE("buttons response") {
    ActionResponse r;
    r.responses.push_back(BotResponse::make_buttons("Which info would you like?", {{"Weather", "/ask_weather"}}));
    Value tree = parse_json(serialize_action_response(r));
    CHECK(tree.find("responses")->as_array()[0].find("buttons")->as_array()[0].find("title")->as_string() == "Weather");
    CHECK(serialize_action_response(r) ==
          R"({"events":[],"responses":[{"text":"Which info would you like?","buttons":[{"title":"Weather","payload":"/ask_weather"}]}]})");
}

TEST_CASE("every response kind has its wire shape") {
    ActionResponse r;
    r.responses = {BotResponse::make_text("hi"), BotResponse::make_image("https://x.test/a.png"),
                   BotResponse::make_attachment("file.pdf"), BotResponse::make_custom(Object{{"k", 1}})};
    CHECK(serialize_action_response(r) ==
          R"({"events":[],"responses":[{"text":"hi"},{"image":"https://x.test/a.png"},{"attachment":"file.pdf"},{"custom":{"k":1}}]})");
}

TEST_CASE("error bodies") {
    CHECK(serialize_error("action_unknown", "no flow branch handles this action") ==
          R"({"action_name":"action_unknown","error":"no flow branch handles this action"})");
    ErrorBody e = parse_error_body(serialize_error("", "empty action"));
    CHECK(e.action_name.empty());
    CHECK(e.error == "empty action");
    ErrorBody w = parse_error_body(serialize_error("action_weather", "upstream API timeout"));
    CHECK(w.action_name == "action_weather");
    CHECK(w.error == "upstream API timeout");
}

TEST_CASE("response invariants") {
    CHECK_NOTHROW(check_invariants(BotResponse::make_text("")));
    CHECK_THROWS_AS(check_invariants(BotResponse::make_buttons("t", {})), Error);
    CHECK_THROWS_AS(check_invariants(BotResponse::make_buttons("t", {{"", "/p"}})), Error);
    BotResponse odd = BotResponse::make_image("x");
    odd.text = "extra";
    CHECK_THROWS_AS(check_invariants(odd), Error);
    testkit::Rng rng(5);
    for (int i = 0; i < 500; ++i) CHECK_NOTHROW(check_invariants(testkit::random_bot_response(rng)));
}

TEST_CASE("unsupported event kinds are rejected when reading a response") {
    CHECK_THROWS_AS(parse_action_response(R"({"events":[{"event":"restart"}],"responses":[]})"), ParseError);
    CHECK_THROWS_AS(parse_action_response(R"({"events":[],"responses":[{}]})"), ParseError);
}

TEST_CASE("property: parse inverts serialize over generated responses") {
    testkit::Rng rng(2024);
    for (int i = 0; i < 1000; ++i) {
        ActionResponse r = testkit::random_action_response(rng);
        std::string bytes = serialize_action_response(r);
        CAPTURE(bytes);
        REQUIRE(parse_action_response(bytes) == r);
        REQUIRE(serialize_action_response(r) == bytes);
    }
}

TEST_CASE("property: requests with extra fields still parse") {
    testkit::Rng rng(99);
    for (int i = 0; i < 1000; ++i) {
        Object slots;
        for (int k = 0; k < 3; ++k) slots.set(testkit::random_identifier(rng), testkit::random_value(rng, 2));
        Value tree = testkit::request_tree("action_" + testkit::random_identifier(rng), slots, "s" + std::to_string(i));
        for (int k = 0; k < 4; ++k) tree.as_object().set("x_" + testkit::random_identifier(rng), testkit::random_value(rng));
        tree["tracker"].as_object().set("extra_" + testkit::random_identifier(rng), testkit::random_value(rng));
        std::string body = to_json(tree);
        CAPTURE(body);
        ActionRequest r = parse_action_request(body);
        REQUIRE(Value(slots) == [&] {
            Object o;
            for (const auto& [k, v] : r.tracker.slots) o.set(k, v);
            return Value(o);
        }());
        REQUIRE(r.raw == tree);
    }
}
