// Copyright (c) bipkit contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "bip/model.hpp"

namespace bip {
namespace detail {

// Canonical text layout: each definition is rendered on a single line when it
// fits in 100 columns, otherwise one declaration per line with 2-space indent.
// The rule is a pure function of the content, so printing is deterministic
// and parse(print(m)) == m.
constexpr std::size_t kPrintWidth = 100;

inline int precedence(BinaryOp op) {
    switch (op) {
        case BinaryOp::Or: return 1;
        case BinaryOp::And: return 2;
        case BinaryOp::Eq:
        case BinaryOp::Ne: return 3;
        case BinaryOp::Lt:
        case BinaryOp::Le:
        case BinaryOp::Gt:
        case BinaryOp::Ge: return 4;
        case BinaryOp::Add:
        case BinaryOp::Sub: return 5;
        case BinaryOp::Mul:
        case BinaryOp::Div:
        case BinaryOp::Mod: return 6;
    }
    return 0;
}

inline void print_expr(std::string& out, const Expr& e, int parent_prec) {
    switch (e.kind) {
        case Expr::Kind::Constant: out += value_to_string(e.constant); return;
        case Expr::Kind::VarRead: out += e.path; return;
        case Expr::Kind::StateTest:
            out += e.path;
            out += '@';
            out += e.state;
            return;
        case Expr::Kind::Unary: {
            out += e.un == UnaryOp::Negate ? '-' : '!';
            // unary binds tighter than any binary operator
            print_expr(out, *e.lhs, 7);
            return;
        }
        case Expr::Kind::Binary: {
            int prec = precedence(e.bin);
            bool paren = prec < parent_prec;
            if (paren) out += '(';
            print_expr(out, *e.lhs, prec);
            out += ' ';
            out += to_string(e.bin);
            out += ' ';
            // left-associative: right child needs strictly higher precedence
            print_expr(out, *e.rhs, prec + 1);
            if (paren) out += ')';
            return;
        }
    }
}

inline std::string expr_text(const ExprPtr& e) {
    std::string out;
    if (e) print_expr(out, *e, 0);
    return out;
}

inline std::string action_text(const ActionSeq& seq) {
    std::string out;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i) out += "; ";
        out += seq[i].target;
        out += " := ";
        out += expr_text(seq[i].value);
    }
    return out;
}

inline std::string port_decl_text(const PortDecl& p) {
    std::string out = "port " + p.name;
    if (!p.exported_vars.empty()) {
        out += '(';
        for (std::size_t i = 0; i < p.exported_vars.size(); ++i) {
            if (i) out += ", ";
            out += p.exported_vars[i];
        }
        out += ')';
    }
    return out;
}

inline std::string var_decl_text(const VarDecl& v) {
    return std::string("var ") + to_string(v.type) + ' ' + v.name;
}

inline std::string init_text(const InitSpec& init) {
    std::string out = "init";
    if (init.guard) out += " provided " + expr_text(init.guard);
    if (!init.action.empty()) out += " do " + action_text(init.action);
    out += " -> " + init.target;
    return out;
}

inline std::string transition_text(const Transition& t) {
    std::string out = "on " + t.port + " from " + t.source + " to " + t.target;
    if (t.guard) out += " provided " + expr_text(t.guard);
    if (!t.action.empty()) out += " do " + action_text(t.action);
    return out;
}

inline std::string connector_text(const ConnectorDef& c) {
    std::string out = "connector " + c.name + '(';
    for (std::size_t i = 0; i < c.ends.size(); ++i) {
        if (i) out += ", ";
        out += c.ends[i].path;
        if (c.ends[i].trigger) out += '\'';
    }
    out += ')';
    if (c.exported) {
        out += " export " + c.exported->port_name;
        if (!c.exported->vars.empty()) {
            out += '(';
            for (std::size_t i = 0; i < c.exported->vars.size(); ++i) {
                if (i) out += ' ';
                out += c.exported->vars[i];
            }
            out += ')';
        }
    }
    for (const auto& v : c.vars) out += ' ' + var_decl_text(v);
    if (c.guard) out += " provided " + expr_text(c.guard);
    if (!c.up.empty()) out += " up " + action_text(c.up);
    if (!c.down.empty()) out += " down " + action_text(c.down);
    return out;
}

inline std::string priority_text(const PriorityRule& r) {
    return "priority " + r.low + " < " + r.high;
}

inline void emit_block(std::string& out, const std::string& head,
                       const std::vector<std::string>& items) {
    std::string one_line = head + " {";
    for (const auto& it : items) one_line += ' ' + it;
    one_line += items.empty() ? "}" : " }";
    if (one_line.size() <= kPrintWidth) {
        out += one_line;
        out += '\n';
        return;
    }
    out += head;
    out += " {\n";
    for (const auto& it : items) {
        out += "  ";
        out += it;
        out += '\n';
    }
    out += "}\n";
}

inline void print_atom(std::string& out, const AtomDef& a) {
    std::vector<std::string> items;
    for (const auto& p : a.ports) items.push_back(port_decl_text(p));
    for (const auto& v : a.vars) items.push_back(var_decl_text(v));
    for (const auto& s : a.states) items.push_back("state " + s);
    if (a.init) items.push_back(init_text(*a.init));
    for (const auto& t : a.transitions) items.push_back(transition_text(t));
    emit_block(out, "atom " + a.name, items);
}

inline void print_compound(std::string& out, const CompoundDef& c) {
    std::vector<std::string> items;
    for (const auto& i : c.components) items.push_back("component " + i.name + " : " + i.type);
    for (const auto& conn : c.connectors) items.push_back(connector_text(conn));
    for (const auto& r : c.priorities) items.push_back(priority_text(r));
    for (const auto& e : c.exports) items.push_back("export " + e);
    emit_block(out, "compound " + c.name, items);
}

inline void print_property(std::string& out, const PropertyDef& p) {
    emit_block(out, "property " + p.name, {expr_text(p.predicate)});
}

inline void print_architecture(std::string& out, const ArchitectureDef& a) {
    // Composed architectures carry several parts; the textual form prints one
    // architecture block per part, which re-composes on parse by name lookup.
    for (const auto& part : a.parts) {
        std::vector<std::string> items;
        for (const auto& p : part.params) {
            std::string s = "param " + p.name + " : { ";
            for (std::size_t i = 0; i < p.interface_ports.size(); ++i) {
                if (i) s += ", ";
                s += p.interface_ports[i];
            }
            s += " }";
            items.push_back(s);
        }
        for (const auto& c : part.coordinators)
            items.push_back("coordinator " + c.name + " : " + c.type);
        for (const auto& conn : part.connectors) items.push_back(connector_text(conn));
        for (const auto& r : part.priorities) items.push_back(priority_text(r));
        for (const auto& prop : part.properties) items.push_back("property " + prop);
        emit_block(out, "architecture " + part.source, items);
    }
}

}  // namespace detail

inline std::string pretty_print(const Model& m) {
    std::string out;
    for (const auto& a : m.atoms) detail::print_atom(out, a);
    for (const auto& p : m.properties) detail::print_property(out, p);
    for (const auto& a : m.architectures) detail::print_architecture(out, a);
    for (const auto& c : m.compounds) detail::print_compound(out, c);
    return out;
}

inline std::string pretty_print(const AtomDef& a) {
    std::string out;
    detail::print_atom(out, a);
    return out;
}

inline std::string pretty_print(const CompoundDef& c) {
    std::string out;
    detail::print_compound(out, c);
    return out;
}

}  // namespace bip
