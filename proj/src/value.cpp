#include "flowfill/value.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include <json.hpp>

namespace flowfill {

namespace {

bool is_json_number_literal(std::string_view s) {
    std::size_t i = 0;
    auto digit = [&](std::size_t k) { return k < s.size() && s[k] >= '0' && s[k] <= '9'; };
    if (i < s.size() && s[i] == '-') ++i;
    if (!digit(i)) return false;
    if (s[i] == '0') {
        ++i;
    } else {
        while (digit(i)) ++i;
    }
    if (i < s.size() && s[i] == '.') {
        ++i;
        if (!digit(i)) return false;
        while (digit(i)) ++i;
    }
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        ++i;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
        if (!digit(i)) return false;
        while (digit(i)) ++i;
    }
    return i == s.size();
}

// Builds a Value tree from nlohmann's SAX events; floats arrive with their
// original lexeme, which is what we keep.
class TreeBuilder : public nlohmann::json_sax<nlohmann::json> {
public:
    bool null() override { return put(Value(nullptr)); }
    bool boolean(bool v) override { return put(Value(v)); }
    bool number_integer(number_integer_t v) override { return put(Value(Number{std::to_string(v)})); }
    bool number_unsigned(number_unsigned_t v) override { return put(Value(Number{std::to_string(v)})); }
    bool number_float(number_float_t, const string_t& lexeme) override { return put(Value(Number{lexeme})); }
    bool string(string_t& v) override { return put(Value(std::move(v))); }
    bool binary(binary_t&) override { return false; }

    bool start_object(std::size_t) override {
        stack_.push_back(Frame{Value(Object{}), {}});
        return true;
    }
    bool key(string_t& k) override {
        stack_.back().pending_key = std::move(k);
        return true;
    }
    bool end_object() override { return close(); }
    bool start_array(std::size_t) override {
        stack_.push_back(Frame{Value(Array{}), {}});
        return true;
    }
    bool end_array() override { return close(); }

    bool parse_error(std::size_t position, const std::string&, const nlohmann::detail::exception& ex) override {
        error_ = ex.what();
        position_ = position;
        return false;
    }

    Value take() { return std::move(root_); }
    const std::string& error() const { return error_; }
    std::size_t position() const { return position_; }

private:
    struct Frame {
        Value container;
        std::string pending_key;
    };

    bool put(Value v) {
        if (stack_.empty()) {
            root_ = std::move(v);
            return true;
        }
        Frame& top = stack_.back();
        if (top.container.is_array()) {
            top.container.as_array().push_back(std::move(v));
        } else {
            top.container.as_object().set(std::move(top.pending_key), std::move(v));
        }
        return true;
    }

    bool close() {
        Value done = std::move(stack_.back().container);
        stack_.pop_back();
        return put(std::move(done));
    }

    std::vector<Frame> stack_;
    Value root_;
    std::string error_;
    std::size_t position_ = 0;
};

void write_string(std::string& out, std::string_view s) {
    out.push_back('"');
    for (unsigned char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\b': out += "\\b"; break;
            case '\f': out += "\\f"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out.push_back(static_cast<char>(c));
                }
        }
    }
    out.push_back('"');
}

void newline(std::string& out, const WriteOptions& opt, int depth) {
    if (opt.indent < 0) return;
    out.push_back('\n');
    out.append(static_cast<std::size_t>(opt.indent * depth), ' ');
}

void write_value(std::string& out, const Value& v, const WriteOptions& opt, int depth) {
    switch (v.kind()) {
        case Value::Kind::null: out += "null"; break;
        case Value::Kind::boolean: out += v.as_bool() ? "true" : "false"; break;
        case Value::Kind::number: out += v.as_number().text; break;
        case Value::Kind::string: write_string(out, v.as_string()); break;
        case Value::Kind::array: {
            const Array& a = v.as_array();
            out.push_back('[');
            for (std::size_t i = 0; i < a.size(); ++i) {
                if (i) out.push_back(',');
                newline(out, opt, depth + 1);
                write_value(out, a[i], opt, depth + 1);
            }
            if (!a.empty()) newline(out, opt, depth);
            out.push_back(']');
            break;
        }
        case Value::Kind::object: {
            const Object& o = v.as_object();
            std::vector<const Object::Entry*> entries;
            entries.reserve(o.size());
            for (const auto& e : o) entries.push_back(&e);
            if (opt.sort_keys) {
                std::sort(entries.begin(), entries.end(),
                          [](const auto* a, const auto* b) { return a->first < b->first; });
            }
            out.push_back('{');
            for (std::size_t i = 0; i < entries.size(); ++i) {
                if (i) out.push_back(',');
                newline(out, opt, depth + 1);
                write_string(out, entries[i]->first);
                out += opt.indent < 0 ? ":" : ": ";
                write_value(out, entries[i]->second, opt, depth + 1);
            }
            if (!entries.empty()) newline(out, opt, depth);
            out.push_back('}');
            break;
        }
    }
}

}  // namespace

bool Number::is_integer() const {
    return text.find_first_of(".eE") == std::string::npos;
}

double Number::to_double() const {
    return std::strtod(text.c_str(), nullptr);
}

std::string Number::shortest() const {
    if (is_integer()) return text == "-0" ? "0" : text;
    double d = to_double();
    if (std::isfinite(d) && d == std::trunc(d) && std::fabs(d) < 1e15) {
        char buf[32];
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, static_cast<long long>(d));
        return std::string(buf, end);
    }
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, d);
    return std::string(buf, end);
}

Object::Object(std::initializer_list<Entry> entries) {
    for (const auto& e : entries) set(e.first, e.second);
}

const Value* Object::find(std::string_view key) const {
    for (const auto& e : entries_) {
        if (e.first == key) return &e.second;
    }
    return nullptr;
}

Value* Object::find(std::string_view key) {
    for (auto& e : entries_) {
        if (e.first == key) return &e.second;
    }
    return nullptr;
}

Value& Object::operator[](std::string_view key) {
    if (Value* v = find(key)) return *v;
    entries_.emplace_back(std::string(key), Value());
    return entries_.back().second;
}

void Object::set(std::string key, Value value) {
    if (Value* v = find(key)) {
        *v = std::move(value);
    } else {
        entries_.emplace_back(std::move(key), std::move(value));
    }
}

bool Object::erase(std::string_view key) {
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.first == key; });
    if (it == entries_.end()) return false;
    entries_.erase(it);
    return true;
}

Value Value::from_double(double d) {
    if (!std::isfinite(d)) return Value(nullptr);
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, d);
    std::string text(buf, end);
    if (text.find_first_of(".eE") == std::string::npos) text += ".0";
    return Value(Number{std::move(text)});
}

Value Value::number_text(std::string_view text) {
    if (!is_json_number_literal(text)) {
        throw ParseError("MalformedBody", "", "not a number literal: " + std::string(text));
    }
    return Value(Number{std::string(text)});
}

const Value* Value::find(std::string_view key) const {
    if (!is_object()) return nullptr;
    return as_object().find(key);
}

Value& Value::operator[](std::string_view key) {
    if (is_null()) data_ = Object{};
    return as_object()[key];
}

bool operator==(const Value& a, const Value& b) {
    if (a.kind() != b.kind()) return false;
    switch (a.kind()) {
        case Value::Kind::null: return true;
        case Value::Kind::boolean: return a.as_bool() == b.as_bool();
        case Value::Kind::number: return a.as_number() == b.as_number();
        case Value::Kind::string: return a.as_string() == b.as_string();
        case Value::Kind::array: return a.as_array() == b.as_array();
        case Value::Kind::object: {
            const Object& x = a.as_object();
            const Object& y = b.as_object();
            if (x.size() != y.size()) return false;
            for (const auto& [k, v] : x) {
                const Value* other = y.find(k);
                if (!other || !(*other == v)) return false;
            }
            return true;
        }
    }
    return false;
}

const char* kind_name(Value::Kind kind) {
    switch (kind) {
        case Value::Kind::null: return "null";
        case Value::Kind::boolean: return "boolean";
        case Value::Kind::number: return "number";
        case Value::Kind::string: return "string";
        case Value::Kind::array: return "array";
        case Value::Kind::object: return "object";
    }
    return "?";
}

Value parse_json(std::string_view text) {
    TreeBuilder builder;
    bool ok = nlohmann::json::sax_parse(text.begin(), text.end(), &builder);
    if (!ok) {
        throw ParseError("MalformedBody", "", builder.error().empty() ? "invalid JSON" : builder.error());
    }
    return builder.take();
}

std::string to_json(const Value& value, const WriteOptions& options) {
    std::string out;
    write_value(out, value, options, 0);
    return out;
}

}  // namespace flowfill
