#pragma once

#include <string>
#include <vector>

#include "flowfill/value.hpp"

namespace flowfill::schema {

struct Issue {
    std::string path;
    std::string message;
};

// Checks `instance` against a JSON-Schema subset: type (incl. "integer"),
// enum, properties, required, additionalProperties (bool), items, minItems,
// minimum, maximum, minLength.
std::vector<Issue> check(const Value& schema, const Value& instance);

}  // namespace flowfill::schema
