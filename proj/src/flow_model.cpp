#include "flowfill/flow_model.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "flowfill/nodes.hpp"
#include "flowfill/schema.hpp"

namespace flowfill {

namespace {

[[noreturn]] void violation(const std::string& path, const std::string& message) {
    throw ParseError("SchemaViolation", path, message);
}

const std::string& expect_string(const Value& v, const std::string& path) {
    if (!v.is_string()) violation(path, std::string("expected string, got ") + kind_name(v.kind()));
    return v.as_string();
}

NodeInstance node_from_tree(const Value& tree, const std::string& path) {
    if (!tree.is_object()) violation(path, "node must be an object");
    NodeInstance n;
    const Value* id = tree.find("id");
    if (!id) violation(path + ".id", "required");
    n.id = expect_string(*id, path + ".id");
    const Value* type = tree.find("type");
    if (!type) violation(path + ".type", "required");
    n.type = expect_string(*type, path + ".type");
    if (const Value* label = tree.find("label"); label && !label->is_null()) {
        n.label = expect_string(*label, path + ".label");
    }
    n.config = Object{};
    if (const Value* cfg = tree.find("config"); cfg && !cfg->is_null()) {
        if (!cfg->is_object()) violation(path + ".config", "must be an object");
        n.config = *cfg;
    }
    if (const Value* wires = tree.find("wires"); wires && !wires->is_null()) {
        if (!wires->is_array()) violation(path + ".wires", "must be a list of ports");
        std::size_t p = 0;
        for (const Value& port : wires->as_array()) {
            std::string ppath = path + ".wires." + std::to_string(p++);
            if (!port.is_array()) violation(ppath, "port must be a list of node ids");
            std::vector<std::string> targets;
            std::size_t t = 0;
            for (const Value& target : port.as_array()) {
                targets.push_back(expect_string(target, ppath + "." + std::to_string(t++)));
            }
            n.wires.push_back(std::move(targets));
        }
    }
    return n;
}

struct Collector {
    const FlowDocument& doc;
    std::map<std::string, std::size_t> first_index;
    std::vector<std::pair<std::size_t, Issue>> errors;
    std::vector<std::pair<std::size_t, Issue>> warnings;

    void error(std::size_t index, IssueCode code, std::string detail) {
        errors.push_back({index, {code, doc.nodes[index].id, std::move(detail)}});
    }
    void warning(std::size_t index, IssueCode code, std::string detail) {
        warnings.push_back({index, {code, doc.nodes[index].id, std::move(detail)}});
    }

    static std::vector<Issue> ordered(std::vector<std::pair<std::size_t, Issue>> list) {
        std::stable_sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return static_cast<int>(a.second.code) < static_cast<int>(b.second.code);
        });
        std::vector<Issue> out;
        for (auto& [i, issue] : list) out.push_back(std::move(issue));
        return out;
    }
};

// Indices of nodes that sit on a wire cycle (Tarjan SCC of size > 1, or a
// self-loop).
std::set<std::size_t> nodes_on_cycles(const std::vector<std::vector<std::size_t>>& adj) {
    std::size_t n = adj.size();
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::set<std::size_t> result;
    int counter = 0;

    std::function<void(std::size_t)> connect = [&](std::size_t v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
        for (std::size_t w : adj[v]) {
            if (index[w] < 0) {
                connect(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack[w]) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            std::vector<std::size_t> component;
            std::size_t w;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                component.push_back(w);
            } while (w != v);
            bool self_loop = std::find(adj[v].begin(), adj[v].end(), v) != adj[v].end();
            if (component.size() > 1 || self_loop) result.insert(component.begin(), component.end());
        }
    };
    for (std::size_t v = 0; v < n; ++v) {
        if (index[v] < 0) connect(v);
    }
    return result;
}

Value issue_to_tree(const Issue& issue) {
    return Object{{"code", issue_code_name(issue.code)},
                  {"node_id", issue.node_id ? Value(*issue.node_id) : Value(nullptr)},
                  {"detail", issue.detail}};
}

}  // namespace

const NodeInstance* FlowDocument::find(std::string_view id) const {
    for (const auto& n : nodes) {
        if (n.id == id) return &n;
    }
    return nullptr;
}

const char* issue_code_name(IssueCode code) {
    switch (code) {
        case IssueCode::unknown_type: return "unknown_type";
        case IssueCode::duplicate_id: return "duplicate_id";
        case IssueCode::dangling_wire: return "dangling_wire";
        case IssueCode::cycle: return "cycle";
        case IssueCode::arity_mismatch: return "arity_mismatch";
        case IssueCode::bad_config: return "bad_config";
        case IssueCode::endpoint_conflict: return "endpoint_conflict";
        case IssueCode::unreachable: return "unreachable";
    }
    return "?";
}

FlowDocument flow_from_tree(const Value& tree) {
    if (!tree.is_object()) violation("", "flow document must be an object");
    if (const Value* version = tree.find("version")) {
        if (expect_string(*version, "version") != kFlowSchemaVersion) {
            violation("version", "unsupported flow version '" + version->as_string() + "'");
        }
    }
    FlowDocument doc;
    if (const Value* name = tree.find("name"); name && !name->is_null()) doc.name = expect_string(*name, "name");
    if (const Value* meta = tree.find("metadata"); meta && !meta->is_null()) {
        if (!meta->is_object()) violation("metadata", "must be an object");
        doc.metadata = meta->as_object();
    }
    const Value* nodes = tree.find("nodes");
    if (!nodes) violation("nodes", "required");
    if (!nodes->is_array()) violation("nodes", "must be a list");
    std::size_t i = 0;
    for (const Value& n : nodes->as_array()) {
        doc.nodes.push_back(node_from_tree(n, "nodes." + std::to_string(i++)));
    }
    return doc;
}

FlowDocument parse_flow(std::string_view body) {
    return flow_from_tree(parse_json(body));
}

Value flow_to_tree(const FlowDocument& doc) {
    Array nodes;
    for (const auto& n : doc.nodes) {
        Object o{{"id", n.id}, {"type", n.type}, {"config", n.config}};
        if (n.label) o.set("label", *n.label);
        Array wires;
        for (const auto& port : n.wires) {
            Array targets(port.begin(), port.end());
            wires.push_back(std::move(targets));
        }
        o.set("wires", std::move(wires));
        nodes.push_back(std::move(o));
    }
    return Object{{"version", kFlowSchemaVersion},
                  {"name", doc.name},
                  {"metadata", doc.metadata},
                  {"nodes", std::move(nodes)}};
}

std::string serialize_flow(const FlowDocument& doc) {
    return to_json(flow_to_tree(doc), {2, true}) + "\n";
}

ValidationReport validate_flow(const FlowDocument& doc, const NodeRegistry& registry) {
    Collector c{doc, {}, {}, {}};
    const auto& nodes = doc.nodes;

    CompileOptions opts;
    if (const Value* vars = doc.metadata.find("vars")) opts.vars = *vars;

    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].id.empty()) c.error(i, IssueCode::bad_config, "node id is empty");
        auto [it, inserted] = c.first_index.emplace(nodes[i].id, i);
        if (!inserted) c.error(i, IssueCode::duplicate_id, "id '" + nodes[i].id + "' already used by node #" + std::to_string(it->second));
    }

    std::map<std::pair<std::string, std::string>, std::size_t> endpoints;
    std::vector<std::vector<std::size_t>> adj(nodes.size());

    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const NodeInstance& n = nodes[i];
        const NodeSpec* spec = registry.find(n.type);
        if (!spec) {
            c.error(i, IssueCode::unknown_type, "unknown node type '" + n.type + "'");
        } else {
            bool config_ok = true;
            for (const auto& issue : schema::check(spec->config_schema, n.config)) {
                config_ok = false;
                c.error(i, IssueCode::bad_config, (issue.path.empty() ? "config" : "config." + issue.path) + ": " + issue.message);
            }
            if (config_ok) {
                try {
                    spec->build(n, opts);
                    std::size_t arity = spec->output_arity(n.config);
                    if (arity != n.wires.size()) {
                        c.error(i, IssueCode::arity_mismatch,
                                "type '" + n.type + "' has " + std::to_string(arity) + " output port(s), wires list " +
                                    std::to_string(n.wires.size()));
                    }
                } catch (const ConfigError& e) {
                    c.error(i, IssueCode::bad_config, std::string("config.") + e.what());
                }
            }
            if (n.type == "http_in" && config_ok) {
                try {
                    HttpInConfig ep = HttpInConfig::parse(n.config);
                    auto [it, inserted] = endpoints.emplace(std::make_pair(ep.method, ep.path), i);
                    if (!inserted) {
                        c.error(i, IssueCode::endpoint_conflict,
                                ep.method + " " + ep.path + " is already served by '" + nodes[it->second].id + "'");
                    }
                } catch (const ConfigError&) {
                }
            }
        }

        for (std::size_t p = 0; p < n.wires.size(); ++p) {
            for (const auto& target : n.wires[p]) {
                auto it = c.first_index.find(target);
                if (it == c.first_index.end()) {
                    c.error(i, IssueCode::dangling_wire, "port " + std::to_string(p) + " wires to unknown node '" + target + "'");
                    continue;
                }
                adj[i].push_back(it->second);
                const NodeSpec* target_spec = registry.find(nodes[it->second].type);
                if (target_spec && target_spec->input_arity == 0) {
                    c.error(i, IssueCode::arity_mismatch, "port " + std::to_string(p) + " wires into '" + target + "', which takes no input");
                }
            }
        }
    }

    for (std::size_t i : nodes_on_cycles(adj)) c.error(i, IssueCode::cycle, "node lies on a wire cycle");

    // Reachability from entry points; everything else is dead weight.
    std::vector<bool> seen(nodes.size(), false);
    std::vector<std::size_t> frontier;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].type == "http_in") {
            seen[i] = true;
            frontier.push_back(i);
        }
    }
    while (!frontier.empty()) {
        std::size_t v = frontier.back();
        frontier.pop_back();
        for (std::size_t w : adj[v]) {
            if (!seen[w]) {
                seen[w] = true;
                frontier.push_back(w);
            }
        }
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!seen[i]) c.warning(i, IssueCode::unreachable, "not reachable from any http_in node");
    }

    return {Collector::ordered(std::move(c.errors)), Collector::ordered(std::move(c.warnings))};
}

Value report_to_tree(const ValidationReport& report) {
    Array errors, warnings;
    for (const auto& e : report.errors) errors.push_back(issue_to_tree(e));
    for (const auto& w : report.warnings) warnings.push_back(issue_to_tree(w));
    return Object{{"errors", std::move(errors)}, {"warnings", std::move(warnings)}};
}

std::string format_report(const ValidationReport& report) {
    std::ostringstream out;
    auto line = [&](const char* level, const Issue& issue) {
        out << level << " " << issue_code_name(issue.code);
        if (issue.node_id) out << " [" << *issue.node_id << "]";
        out << ": " << issue.detail << "\n";
    };
    for (const auto& e : report.errors) line("error", e);
    for (const auto& w : report.warnings) line("warning", w);
    out << report.errors.size() << " error(s), " << report.warnings.size() << " warning(s)\n";
    return out.str();
}

std::vector<std::string> list_declared_actions(const FlowDocument& doc) {
    std::vector<std::string> out;
    if (const Value* actions = doc.metadata.find("actions"); actions && actions->is_array()) {
        for (const Value& a : actions->as_array()) {
            if (a.is_string()) out.push_back(a.as_string());
        }
        return out;
    }
    for (const auto& n : doc.nodes) {
        if (n.type != "switch") continue;
        const Value* property = n.config.find("property");
        if (!property || !property->is_string()) continue;
        try {
            tmpl::Path p = tmpl::Path::parse(property->as_string());
            if (p.steps().size() != 1 || p.head() != "action") continue;
        } catch (const ParseError&) {
            continue;
        }
        const Value* rules = n.config.find("rules");
        if (!rules || !rules->is_array()) continue;
        for (const Value& rule : rules->as_array()) {
            const Value* op = rule.find("operator");
            const Value* value = rule.find("value");
            bool equals = !op || (op->is_string() && op->as_string() == "equals");
            if (!equals || !value || !value->is_string()) continue;
            if (std::find(out.begin(), out.end(), value->as_string()) == out.end()) out.push_back(value->as_string());
        }
    }
    return out;
}

}  // namespace flowfill
