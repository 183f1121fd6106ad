#include "flowfill/schema.hpp"

namespace flowfill::schema {

namespace {

bool type_matches(const std::string& type, const Value& v) {
    if (type == "null") return v.is_null();
    if (type == "boolean") return v.is_bool();
    if (type == "number") return v.is_number();
    if (type == "integer") return v.is_number() && v.as_number().is_integer();
    if (type == "string") return v.is_string();
    if (type == "array") return v.is_array();
    if (type == "object") return v.is_object();
    return false;
}

std::string join(const std::string& base, const std::string& step) {
    return base.empty() ? step : base + "." + step;
}

void walk(const Value& schema, const Value& v, const std::string& path, std::vector<Issue>& issues) {
    if (!schema.is_object()) return;

    if (const Value* type = schema.find("type")) {
        bool ok = false;
        std::string expected;
        if (type->is_string()) {
            ok = type_matches(type->as_string(), v);
            expected = type->as_string();
        } else if (type->is_array()) {
            for (const Value& t : type->as_array()) {
                if (!t.is_string()) continue;
                ok = ok || type_matches(t.as_string(), v);
                expected += (expected.empty() ? "" : "|") + t.as_string();
            }
        }
        if (!ok) {
            issues.push_back({path, "expected " + expected + ", got " + kind_name(v.kind())});
            return;
        }
    }

    if (const Value* options = schema.find("enum"); options && options->is_array()) {
        bool found = false;
        for (const Value& o : options->as_array()) found = found || o == v;
        if (!found) issues.push_back({path, "value " + to_json(v) + " is not one of " + to_json(*options)});
    }

    if (v.is_string()) {
        if (const Value* min = schema.find("minLength"); min && min->is_number()) {
            if (static_cast<double>(v.as_string().size()) < min->as_number().to_double()) {
                issues.push_back({path, "string is shorter than " + min->as_number().text});
            }
        }
    }

    if (v.is_number()) {
        double d = v.as_number().to_double();
        if (const Value* min = schema.find("minimum"); min && min->is_number() && d < min->as_number().to_double()) {
            issues.push_back({path, "must be >= " + min->as_number().text});
        }
        if (const Value* max = schema.find("maximum"); max && max->is_number() && d > max->as_number().to_double()) {
            issues.push_back({path, "must be <= " + max->as_number().text});
        }
    }

    if (v.is_array()) {
        const Array& a = v.as_array();
        if (const Value* min = schema.find("minItems"); min && min->is_number()) {
            if (static_cast<double>(a.size()) < min->as_number().to_double()) {
                issues.push_back({path, "needs at least " + min->as_number().text + " item(s)"});
            }
        }
        if (const Value* items = schema.find("items")) {
            for (std::size_t i = 0; i < a.size(); ++i) walk(*items, a[i], join(path, std::to_string(i)), issues);
        }
    }

    if (v.is_object()) {
        const Object& o = v.as_object();
        const Value* props = schema.find("properties");
        if (const Value* required = schema.find("required"); required && required->is_array()) {
            for (const Value& r : required->as_array()) {
                if (r.is_string() && !o.contains(r.as_string())) {
                    issues.push_back({join(path, r.as_string()), "required property is missing"});
                }
            }
        }
        const Value* additional = schema.find("additionalProperties");
        bool closed = additional && additional->is_bool() && !additional->as_bool();
        for (const auto& [key, member] : o) {
            const Value* sub = props ? props->find(key) : nullptr;
            if (sub) {
                walk(*sub, member, join(path, key), issues);
            } else if (closed) {
                issues.push_back({join(path, key), "unknown property"});
            }
        }
    }
}

}  // namespace

std::vector<Issue> check(const Value& schema, const Value& instance) {
    std::vector<Issue> issues;
    walk(schema, instance, "", issues);
    return issues;
}

}  // namespace flowfill::schema
