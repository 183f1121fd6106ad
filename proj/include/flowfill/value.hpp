#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "flowfill/error.hpp"

namespace flowfill {

class Value;

// JSON number kept as its decimal text so slot values survive any number of
// parse/serialize cycles unchanged.
struct Number {
    std::string text;

    bool is_integer() const;
    double to_double() const;
    // Shortest decimal form: integers verbatim, everything else as the
    // shortest text that round-trips the double.
    std::string shortest() const;

    friend bool operator==(const Number&, const Number&) = default;
};

// Insertion-ordered string map. Lookups are linear; objects in this domain
// are small.
class Object {
public:
    using Entry = std::pair<std::string, Value>;

    Object() = default;
    Object(std::initializer_list<Entry> entries);

    const Value* find(std::string_view key) const;
    Value* find(std::string_view key);
    bool contains(std::string_view key) const { return find(key) != nullptr; }

    // Inserts null when missing.
    Value& operator[](std::string_view key);
    void set(std::string key, Value value);
    bool erase(std::string_view key);

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }
    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }

private:
    std::vector<Entry> entries_;
};

using Array = std::vector<Value>;

// Immutable-by-convention JSON tree used for payloads, configs and slots.
class Value {
public:
    enum class Kind { null, boolean, number, string, array, object };

    Value() : data_(nullptr) {}
    Value(std::nullptr_t) : data_(nullptr) {}
    Value(bool b) : data_(b) {}
    Value(Number n) : data_(std::move(n)) {}
    Value(int v) : data_(Number{std::to_string(v)}) {}
    Value(std::int64_t v) : data_(Number{std::to_string(v)}) {}
    Value(std::string s) : data_(std::move(s)) {}
    Value(std::string_view s) : data_(std::string(s)) {}
    Value(const char* s) : data_(std::string(s)) {}
    Value(Array a) : data_(std::move(a)) {}
    Value(Object o) : data_(std::move(o)) {}

    static Value from_double(double d);
    // Throws ParseError when `text` is not a JSON number literal.
    static Value number_text(std::string_view text);

    Kind kind() const { return static_cast<Kind>(data_.index()); }
    bool is_null() const { return kind() == Kind::null; }
    bool is_bool() const { return kind() == Kind::boolean; }
    bool is_number() const { return kind() == Kind::number; }
    bool is_string() const { return kind() == Kind::string; }
    bool is_array() const { return kind() == Kind::array; }
    bool is_object() const { return kind() == Kind::object; }

    bool as_bool() const { return std::get<bool>(data_); }
    const Number& as_number() const { return std::get<Number>(data_); }
    const std::string& as_string() const { return std::get<std::string>(data_); }
    const Array& as_array() const { return std::get<Array>(data_); }
    Array& as_array() { return std::get<Array>(data_); }
    const Object& as_object() const { return std::get<Object>(data_); }
    Object& as_object() { return std::get<Object>(data_); }

    // Object member lookup; nullptr when not an object or key missing.
    const Value* find(std::string_view key) const;

    // Converts null to an empty object before inserting.
    Value& operator[](std::string_view key);

    // Objects compare without regard to member order.
    friend bool operator==(const Value& a, const Value& b);

private:
    std::variant<std::nullptr_t, bool, Number, std::string, Array, Object> data_;
};

const char* kind_name(Value::Kind kind);

struct WriteOptions {
    int indent = -1;  // < 0: compact
    bool sort_keys = false;
};

// Throws ParseError("MalformedBody", ...) on invalid JSON or invalid UTF-8.
Value parse_json(std::string_view text);
std::string to_json(const Value& value, const WriteOptions& options = {});

}  // namespace flowfill
