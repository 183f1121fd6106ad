#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "flowfill/value.hpp"

namespace flowfill::tmpl {

// One step of a dotted path. A step made only of decimal digits is an index;
// the index still reaches a map member with that key when the container is a
// map.
struct PathStep {
    std::string key;
    std::optional<std::size_t> index;

    friend bool operator==(const PathStep&, const PathStep&) = default;
};

class Path {
public:
    Path() = default;

    // "payload.location.name"; whitespace around steps is trimmed.
    // Throws ParseError("EmptyPlaceholder") on an empty path or empty step.
    static Path parse(std::string_view text);

    const std::vector<PathStep>& steps() const { return steps_; }
    bool empty() const { return steps_.empty(); }
    const std::string& head() const { return steps_.front().key; }
    Path tail() const;
    std::string str() const;

    friend bool operator==(const Path&, const Path&) = default;

private:
    std::vector<PathStep> steps_;
};

struct Literal {
    std::string text;
    friend bool operator==(const Literal&, const Literal&) = default;
};

struct Placeholder {
    Path path;
    std::string source;  // "{{ a.b }}" exactly as written
    friend bool operator==(const Placeholder&, const Placeholder&) = default;
};

using Segment = std::variant<Literal, Placeholder>;

enum class Mode { raw, url_component };

class TemplateString {
public:
    TemplateString() = default;
    explicit TemplateString(std::vector<Segment> segments);

    const std::string& source() const { return source_; }
    const std::vector<Segment>& segments() const { return segments_; }
    std::size_t placeholder_count() const;

    // Segment-wise concatenation.
    TemplateString operator+(const TemplateString& other) const;

private:
    std::string source_;
    std::vector<Segment> segments_;
};

// Throws ParseError with code UnbalancedBraces or EmptyPlaceholder.
TemplateString parse_template(std::string_view text);

// nullptr when any step misses.
const Value* resolve_path(const Value& value, const Path& path);

// Strings verbatim, numbers in shortest form, booleans, null -> "",
// containers as compact JSON.
std::string stringify(const Value& value);

std::string percent_encode(std::string_view text);

class MissingValue : public Error {
public:
    explicit MissingValue(const Path& path)
        : Error("MissingValue", "no value at " + path.str()), path_(path) {}
    const Path& path() const { return path_; }

private:
    Path path_;
};

struct RenderResult {
    std::string text;
    std::vector<Path> missing;  // placeholders that resolved to absent
};

// Throws MissingValue only when `strict` and a placeholder is absent.
RenderResult render_ex(const TemplateString& tpl, const Value& value, Mode mode, bool strict);
std::string render(const TemplateString& tpl, const Value& value, Mode mode = Mode::raw, bool strict = false);

// Replaces placeholders whose first step is `root` with literal text taken
// from `bindings` (raw, never encoded). Returns the paths that had no binding.
TemplateString bind_literals(const TemplateString& tpl, std::string_view root, const Value& bindings,
                             std::vector<Path>* unbound = nullptr);

}  // namespace flowfill::tmpl
