#include "flowfill/template.hpp"

#include <algorithm>

namespace flowfill::tmpl {

namespace {

std::string_view trim(std::string_view s) {
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string segment_source(const Segment& s) {
    if (const auto* lit = std::get_if<Literal>(&s)) return lit->text;
    return std::get<Placeholder>(s).source;
}

}  // namespace

Path Path::parse(std::string_view text) {
    Path p;
    std::string_view rest = trim(text);
    if (rest.empty()) throw ParseError("EmptyPlaceholder", "", "empty path");
    while (true) {
        auto dot = rest.find('.');
        std::string_view step = trim(rest.substr(0, dot));
        if (step.empty()) {
            throw ParseError("EmptyPlaceholder", "", "empty step in path '" + std::string(text) + "'");
        }
        PathStep s{std::string(step), std::nullopt};
        if (all_digits(step) && step.size() <= 9) s.index = std::stoul(std::string(step));
        p.steps_.push_back(std::move(s));
        if (dot == std::string_view::npos) break;
        rest = rest.substr(dot + 1);
    }
    return p;
}

Path Path::tail() const {
    Path p;
    if (steps_.size() > 1) p.steps_.assign(steps_.begin() + 1, steps_.end());
    return p;
}

std::string Path::str() const {
    std::string out;
    for (std::size_t i = 0; i < steps_.size(); ++i) {
        if (i) out.push_back('.');
        out += steps_[i].key;
    }
    return out;
}

TemplateString::TemplateString(std::vector<Segment> segments) : segments_(std::move(segments)) {
    for (const auto& s : segments_) source_ += segment_source(s);
}

std::size_t TemplateString::placeholder_count() const {
    return static_cast<std::size_t>(std::count_if(segments_.begin(), segments_.end(), [](const Segment& s) {
        return std::holds_alternative<Placeholder>(s);
    }));
}

TemplateString TemplateString::operator+(const TemplateString& other) const {
    std::vector<Segment> all = segments_;
    all.insert(all.end(), other.segments_.begin(), other.segments_.end());
    return TemplateString(std::move(all));
}

TemplateString parse_template(std::string_view text) {
    std::vector<Segment> segments;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto open = text.find("{{", pos);
        if (open == std::string_view::npos) {
            segments.push_back(Literal{std::string(text.substr(pos))});
            break;
        }
        if (open > pos) segments.push_back(Literal{std::string(text.substr(pos, open - pos))});
        auto close = text.find("}}", open + 2);
        if (close == std::string_view::npos) {
            throw ParseError("UnbalancedBraces", "", "'{{' at offset " + std::to_string(open) + " is never closed");
        }
        std::string_view inner = text.substr(open + 2, close - open - 2);
        Path path;
        try {
            path = Path::parse(inner);
        } catch (const ParseError& e) {
            throw ParseError("EmptyPlaceholder", "", "placeholder at offset " + std::to_string(open) + ": " + e.what());
        }
        segments.push_back(Placeholder{std::move(path), std::string(text.substr(open, close + 2 - open))});
        pos = close + 2;
    }
    return TemplateString(std::move(segments));
}

const Value* resolve_path(const Value& value, const Path& path) {
    const Value* cur = &value;
    for (const auto& step : path.steps()) {
        if (cur->is_object()) {
            cur = cur->as_object().find(step.key);
        } else if (cur->is_array() && step.index) {
            const Array& a = cur->as_array();
            cur = *step.index < a.size() ? &a[*step.index] : nullptr;
        } else {
            cur = nullptr;
        }
        if (!cur) return nullptr;
    }
    return cur;
}

std::string stringify(const Value& value) {
    switch (value.kind()) {
        case Value::Kind::null: return "";
        case Value::Kind::boolean: return value.as_bool() ? "true" : "false";
        case Value::Kind::number: return value.as_number().shortest();
        case Value::Kind::string: return value.as_string();
        default: return to_json(value);
    }
}

std::string percent_encode(std::string_view text) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(text.size());
    for (unsigned char c : text) {
        bool unreserved = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' ||
                          c == '.' || c == '_' || c == '~';
        if (unreserved) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0x0F]);
        }
    }
    return out;
}

RenderResult render_ex(const TemplateString& tpl, const Value& value, Mode mode, bool strict) {
    RenderResult result;
    for (const auto& seg : tpl.segments()) {
        if (const auto* lit = std::get_if<Literal>(&seg)) {
            result.text += lit->text;
            continue;
        }
        const auto& ph = std::get<Placeholder>(seg);
        const Value* resolved = resolve_path(value, ph.path);
        if (!resolved) {
            if (strict) throw MissingValue(ph.path);
            result.missing.push_back(ph.path);
            continue;
        }
        std::string s = stringify(*resolved);
        result.text += mode == Mode::url_component ? percent_encode(s) : s;
    }
    return result;
}

std::string render(const TemplateString& tpl, const Value& value, Mode mode, bool strict) {
    return render_ex(tpl, value, mode, strict).text;
}

TemplateString bind_literals(const TemplateString& tpl, std::string_view root, const Value& bindings,
                             std::vector<Path>* unbound) {
    std::vector<Segment> out;
    for (const auto& seg : tpl.segments()) {
        const auto* ph = std::get_if<Placeholder>(&seg);
        if (!ph || ph->path.head() != root) {
            out.push_back(seg);
            continue;
        }
        const Value* v = ph->path.steps().size() > 1 ? resolve_path(bindings, ph->path.tail()) : &bindings;
        if (!v) {
            if (unbound) unbound->push_back(ph->path);
            out.push_back(seg);
            continue;
        }
        out.push_back(Literal{stringify(*v)});
    }
    return TemplateString(std::move(out));
}

}  // namespace flowfill::tmpl
