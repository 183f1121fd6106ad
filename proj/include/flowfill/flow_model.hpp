#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flowfill/value.hpp"

namespace flowfill {

class NodeRegistry;

inline constexpr std::string_view kFlowSchemaVersion = "flowfill/1";

struct NodeInstance {
    std::string id;
    std::string type;
    std::optional<std::string> label;
    Value config;  // always an object after parse_flow
    std::vector<std::vector<std::string>> wires;

    friend bool operator==(const NodeInstance&, const NodeInstance&) = default;
};

struct FlowDocument {
    std::string name;
    std::vector<NodeInstance> nodes;
    Object metadata;

    const NodeInstance* find(std::string_view id) const;

    friend bool operator==(const FlowDocument& a, const FlowDocument& b) {
        return a.name == b.name && a.nodes == b.nodes && Value(a.metadata) == Value(b.metadata);
    }
};

enum class IssueCode { unknown_type, duplicate_id, dangling_wire, cycle, arity_mismatch, bad_config, endpoint_conflict, unreachable };

const char* issue_code_name(IssueCode code);

struct Issue {
    IssueCode code;
    std::optional<std::string> node_id;
    std::string detail;
};

struct ValidationReport {
    std::vector<Issue> errors;
    std::vector<Issue> warnings;

    bool deployable() const { return errors.empty(); }
};

// Structural parse only; semantics are checked by validate_flow.
// Throws ParseError with code MalformedBody or SchemaViolation.
FlowDocument parse_flow(std::string_view body);
FlowDocument flow_from_tree(const Value& tree);

// Keys sorted, 2-space indent, nodes in document order.
std::string serialize_flow(const FlowDocument& doc);
Value flow_to_tree(const FlowDocument& doc);

ValidationReport validate_flow(const FlowDocument& doc, const NodeRegistry& registry);

Value report_to_tree(const ValidationReport& report);
std::string format_report(const ValidationReport& report);

std::vector<std::string> list_declared_actions(const FlowDocument& doc);

}  // namespace flowfill
