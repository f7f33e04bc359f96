// Copyright (c) bipkit contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "bip/expr.hpp"

namespace bip {

// In-memory model IR. Structural equality throughout ignores source spans;
// it is the equivalence used by the parse/print round-trip law and by the
// architecture composition laws.

struct VarDecl {
    std::string name;
    ValueType type = ValueType::Int;
    SourceSpan span;
};
inline bool operator==(const VarDecl& a, const VarDecl& b) {
    return a.name == b.name && a.type == b.type;
}

struct PortDecl {
    std::string name;
    std::vector<std::string> exported_vars;
    SourceSpan span;
};
inline bool operator==(const PortDecl& a, const PortDecl& b) {
    return a.name == b.name && a.exported_vars == b.exported_vars;
}

struct Assign {
    std::string target;  // variable path
    ExprPtr value;
    SourceSpan span;
};
inline bool operator==(const Assign& a, const Assign& b) {
    return a.target == b.target && expr_equal(a.value, b.value);
}
using ActionSeq = std::vector<Assign>;

struct InitSpec {
    ExprPtr guard;  // null = true
    ActionSeq action;
    std::string target;
    SourceSpan span;
};
inline bool operator==(const InitSpec& a, const InitSpec& b) {
    return expr_equal(a.guard, b.guard) && a.action == b.action && a.target == b.target;
}

struct Transition {
    std::string port;
    std::string source;
    std::string target;
    ExprPtr guard;  // null = true
    ActionSeq action;
    SourceSpan span;
};
inline bool operator==(const Transition& a, const Transition& b) {
    return a.port == b.port && a.source == b.source && a.target == b.target &&
           expr_equal(a.guard, b.guard) && a.action == b.action;
}

struct AtomDef {
    std::string name;
    std::vector<PortDecl> ports;
    std::vector<VarDecl> vars;
    std::vector<std::string> states;
    std::optional<InitSpec> init;
    std::vector<Transition> transitions;
    SourceSpan span;

    const PortDecl* find_port(const std::string& n) const {
        for (const auto& p : ports)
            if (p.name == n) return &p;
        return nullptr;
    }
    const VarDecl* find_var(const std::string& n) const {
        for (const auto& v : vars)
            if (v.name == n) return &v;
        return nullptr;
    }
    bool has_state(const std::string& n) const {
        return std::find(states.begin(), states.end(), n) != states.end();
    }
};
inline bool operator==(const AtomDef& a, const AtomDef& b) {
    return a.name == b.name && a.ports == b.ports && a.vars == b.vars && a.states == b.states &&
           a.init == b.init && a.transitions == b.transitions;
}

struct ConnectorEnd {
    std::string path;  // "component.port" or "connector.exported_port"
    bool trigger = false;
    SourceSpan span;
};
inline bool operator==(const ConnectorEnd& a, const ConnectorEnd& b) {
    return a.path == b.path && a.trigger == b.trigger;
}

struct ExportSpec {
    std::string port_name;
    std::vector<std::string> vars;  // connector variables exported through the port
    SourceSpan span;
};
inline bool operator==(const ExportSpec& a, const ExportSpec& b) {
    return a.port_name == b.port_name && a.vars == b.vars;
}

struct ConnectorDef {
    std::string name;
    std::vector<ConnectorEnd> ends;
    std::optional<ExportSpec> exported;
    std::vector<VarDecl> vars;
    ExprPtr guard;  // null = true
    ActionSeq up;
    ActionSeq down;
    SourceSpan span;
};
inline bool operator==(const ConnectorDef& a, const ConnectorDef& b) {
    return a.name == b.name && a.ends == b.ends && a.exported == b.exported && a.vars == b.vars &&
           expr_equal(a.guard, b.guard) && a.up == b.up && a.down == b.down;
}

/// Priority rule `low < high` between connectors. The optional port masks
/// refine a side to the member whose participating top-level ends match
/// exactly (no concrete syntax; programmatic use only).
struct PriorityRule {
    std::string low;
    std::string high;
    std::vector<std::string> low_ports;
    std::vector<std::string> high_ports;
    SourceSpan span;
};
inline bool operator==(const PriorityRule& a, const PriorityRule& b) {
    return a.low == b.low && a.high == b.high && a.low_ports == b.low_ports &&
           a.high_ports == b.high_ports;
}

struct InstanceDecl {
    std::string name;
    std::string type;
    SourceSpan span;
};
inline bool operator==(const InstanceDecl& a, const InstanceDecl& b) {
    return a.name == b.name && a.type == b.type;
}

struct CompoundDef {
    std::string name;
    std::vector<InstanceDecl> components;
    std::vector<ConnectorDef> connectors;
    std::vector<PriorityRule> priorities;
    std::vector<std::string> exports;  // exported-port names of own connectors
    SourceSpan span;

    const ConnectorDef* find_connector(const std::string& n) const {
        for (const auto& c : connectors)
            if (c.name == n) return &c;
        return nullptr;
    }
    const InstanceDecl* find_component(const std::string& n) const {
        for (const auto& c : components)
            if (c.name == n) return &c;
        return nullptr;
    }
};
inline bool operator==(const CompoundDef& a, const CompoundDef& b) {
    return a.name == b.name && a.components == b.components && a.connectors == b.connectors &&
           a.priorities == b.priorities && a.exports == b.exports;
}

struct PropertyDef {
    std::string name;
    ExprPtr predicate;
    SourceSpan span;
};
inline bool operator==(const PropertyDef& a, const PropertyDef& b) {
    return a.name == b.name && expr_equal(a.predicate, b.predicate);
}

struct ArchParam {
    std::string name;
    std::vector<std::string> interface_ports;
    SourceSpan span;
};
inline bool operator==(const ArchParam& a, const ArchParam& b) {
    return a.name == b.name && a.interface_ports == b.interface_ports;
}

struct CoordinatorDecl {
    std::string name;
    std::string type;
    SourceSpan span;
};
inline bool operator==(const CoordinatorDecl& a, const CoordinatorDecl& b) {
    return a.name == b.name && a.type == b.type;
}

/// One constituent architecture. A freshly parsed architecture has a single
/// part whose source tag is its own name; composition unions part sets.
struct ArchPart {
    std::string source;
    std::vector<ArchParam> params;
    std::vector<CoordinatorDecl> coordinators;
    std::vector<ConnectorDef> connectors;
    std::vector<PriorityRule> priorities;
    std::vector<std::string> properties;  // names of top-level property defs
};
inline bool operator==(const ArchPart& a, const ArchPart& b) {
    return a.source == b.source && a.params == b.params && a.coordinators == b.coordinators &&
           a.connectors == b.connectors && a.priorities == b.priorities &&
           a.properties == b.properties;
}

struct ArchitectureDef {
    std::string name;
    std::vector<ArchPart> parts;
    SourceSpan span;
};
inline bool operator==(const ArchitectureDef& a, const ArchitectureDef& b) {
    return a.name == b.name && a.parts == b.parts;
}

struct Model {
    std::vector<AtomDef> atoms;
    std::vector<CompoundDef> compounds;
    std::vector<PropertyDef> properties;
    std::vector<ArchitectureDef> architectures;

    const AtomDef* find_atom(const std::string& n) const {
        for (const auto& a : atoms)
            if (a.name == n) return &a;
        return nullptr;
    }
    const CompoundDef* find_compound(const std::string& n) const {
        for (const auto& c : compounds)
            if (c.name == n) return &c;
        return nullptr;
    }
    const PropertyDef* find_property(const std::string& n) const {
        for (const auto& p : properties)
            if (p.name == n) return &p;
        return nullptr;
    }
    const ArchitectureDef* find_architecture(const std::string& n) const {
        for (const auto& a : architectures)
            if (a.name == n) return &a;
        return nullptr;
    }

    /// Model root: the last top-level compound definition, if any.
    const CompoundDef* root() const { return compounds.empty() ? nullptr : &compounds.back(); }
};
inline bool operator==(const Model& a, const Model& b) {
    return a.atoms == b.atoms && a.compounds == b.compounds && a.properties == b.properties &&
           a.architectures == b.architectures;
}

inline bool valid_identifier(const std::string& s) {
    if (s.empty()) return false;
    auto head = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; };
    auto tail = [&](char c) { return head(c) || (c >= '0' && c <= '9'); };
    if (!head(s[0])) return false;
    for (std::size_t i = 1; i < s.size(); ++i)
        if (!tail(s[i])) return false;
    return true;
}

inline std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        auto dot = path.find('.', start);
        if (dot == std::string::npos) {
            parts.push_back(path.substr(start));
            return parts;
        }
        parts.push_back(path.substr(start, dot - start));
        start = dot + 1;
    }
}

}  // namespace bip
