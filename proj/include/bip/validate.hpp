// Copyright (c) bipkit contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bip/diagnostics.hpp"
#include "bip/model.hpp"

namespace bip {
namespace detail {

class Validator {
public:
    explicit Validator(const Model& m) : model_(m) {}

    std::vector<Diagnostic> run() {
        check_toplevel_names();
        check_component_recursion();
        for (const auto& a : model_.atoms) check_atom(a);
        for (const auto& c : model_.compounds) check_compound(c);
        for (const auto& arch : model_.architectures) check_architecture(arch);
        check_properties();
        return std::move(diags_);
    }

private:
    const Model& model_;
    std::vector<Diagnostic> diags_;
    std::set<std::string> recursive_compounds_;

    void error(const SourceSpan& sp, std::string code, std::string msg) {
        diags_.push_back({Severity::Error, std::move(code), std::move(msg), sp});
    }
    void warn(const SourceSpan& sp, std::string code, std::string msg) {
        diags_.push_back({Severity::Warning, std::move(code), std::move(msg), sp});
    }

    void check_ident(const std::string& s, const SourceSpan& sp, const char* what) {
        if (!valid_identifier(s))
            error(sp, "bad-identifier", std::string(what) + " '" + s + "' is not a valid identifier");
    }

    // ---- name tables --------------------------------------------------------

    void check_toplevel_names() {
        std::set<std::string> types;
        for (const auto& a : model_.atoms) {
            check_ident(a.name, a.span, "atom name");
            if (!types.insert(a.name).second)
                error(a.span, "dup-definition", "component type '" + a.name + "' defined twice");
        }
        for (const auto& c : model_.compounds) {
            check_ident(c.name, c.span, "compound name");
            if (!types.insert(c.name).second)
                error(c.span, "dup-definition", "component type '" + c.name + "' defined twice");
        }
        std::set<std::string> props;
        for (const auto& p : model_.properties)
            if (!props.insert(p.name).second)
                error(p.span, "dup-definition", "property '" + p.name + "' defined twice");
        std::set<std::string> archs;
        for (const auto& a : model_.architectures)
            if (!archs.insert(a.name).second)
                error(a.span, "dup-definition", "architecture '" + a.name + "' defined twice");
    }

    void check_component_recursion() {
        // Compound instantiation must be acyclic; everything downstream relies
        // on finite instance trees.
        for (const auto& c : model_.compounds) {
            std::set<std::string> path;
            if (has_cycle(c, path))
                recursive_compounds_.insert(c.name);
        }
        for (const auto& name : recursive_compounds_) {
            const CompoundDef* c = model_.find_compound(name);
            error(c->span, "recursive-compound",
                  "compound '" + name + "' instantiates itself (directly or indirectly)");
        }
    }
    bool has_cycle(const CompoundDef& c, std::set<std::string>& path) {
        if (!path.insert(c.name).second) return true;
        for (const auto& inst : c.components) {
            if (const CompoundDef* sub = model_.find_compound(inst.type)) {
                if (has_cycle(*sub, path)) return true;
            }
        }
        path.erase(c.name);
        return false;
    }
    bool is_recursive(const std::string& name) const {
        return recursive_compounds_.count(name) > 0;
    }

    // ---- expression type checking -------------------------------------------

    using VarTypeFn = std::function<std::optional<ValueType>(const std::string&)>;
    // returns true if the state test is resolvable, false if definitely bad,
    // nullopt if it cannot be judged here (deferred, e.g. architecture params)
    using StateTestFn = std::function<std::optional<bool>(const std::string&, const std::string&)>;

    std::optional<ValueType> infer(const ExprPtr& e, const VarTypeFn& var_type,
                                   const StateTestFn& state_test, const std::string& where) {
        if (!e) return ValueType::Bool;  // absent guard
        switch (e->kind) {
            case Expr::Kind::Constant: return type_of(e->constant);
            case Expr::Kind::VarRead: {
                auto t = var_type(e->path);
                if (!t)
                    error(e->span, "unknown-variable",
                          "unknown variable '" + e->path + "' in " + where);
                return t;
            }
            case Expr::Kind::StateTest: {
                if (!state_test) {
                    error(e->span, "state-test-context",
                          "state test '" + e->path + "@" + e->state +
                              "' is only allowed in properties");
                    return std::nullopt;
                }
                auto ok = state_test(e->path, e->state);
                if (ok.has_value() && !*ok)
                    error(e->span, "unknown-state-test",
                          "cannot resolve state test '" + e->path + "@" + e->state + "' in " + where);
                return ValueType::Bool;
            }
            case Expr::Kind::Unary: {
                auto t = infer(e->lhs, var_type, state_test, where);
                ValueType need = e->un == UnaryOp::Negate ? ValueType::Int : ValueType::Bool;
                if (t && *t != need)
                    error(e->span, "type-mismatch",
                          std::string(e->un == UnaryOp::Negate ? "negation" : "logical not") +
                              " applied to " + to_string(*t) + " in " + where);
                return need;
            }
            case Expr::Kind::Binary: {
                auto lt = infer(e->lhs, var_type, state_test, where);
                auto rt = infer(e->rhs, var_type, state_test, where);
                switch (e->bin) {
                    case BinaryOp::Add: case BinaryOp::Sub: case BinaryOp::Mul:
                    case BinaryOp::Div: case BinaryOp::Mod:
                        require(lt, ValueType::Int, e, where);
                        require(rt, ValueType::Int, e, where);
                        return ValueType::Int;
                    case BinaryOp::Lt: case BinaryOp::Le: case BinaryOp::Gt: case BinaryOp::Ge:
                        require(lt, ValueType::Int, e, where);
                        require(rt, ValueType::Int, e, where);
                        return ValueType::Bool;
                    case BinaryOp::Eq: case BinaryOp::Ne:
                        if (lt && rt && *lt != *rt)
                            error(e->span, "type-mismatch",
                                  std::string("comparison of ") + to_string(*lt) + " with " +
                                      to_string(*rt) + " in " + where);
                        return ValueType::Bool;
                    case BinaryOp::And: case BinaryOp::Or:
                        require(lt, ValueType::Bool, e, where);
                        require(rt, ValueType::Bool, e, where);
                        return ValueType::Bool;
                }
                return std::nullopt;
            }
        }
        return std::nullopt;
    }

    void require(std::optional<ValueType> got, ValueType need, const ExprPtr& e,
                 const std::string& where) {
        if (got && *got != need)
            error(e->span, "type-mismatch",
                  std::string("operator '") + to_string(e->bin) + "' needs " + to_string(need) +
                      " operand, got " + to_string(*got) + " in " + where);
    }

    void check_guard(const ExprPtr& g, const VarTypeFn& vt, const StateTestFn& st,
                     const std::string& where) {
        auto t = infer(g, vt, st, where);
        if (t && *t != ValueType::Bool)
            error(g ? g->span : SourceSpan{}, "type-mismatch", "guard of " + where + " is not boolean");
    }

    void check_action(const ActionSeq& action, const VarTypeFn& read_type,
                      const VarTypeFn& write_type, const std::string& where) {
        for (const auto& a : action) {
            auto wt = write_type(a.target);
            if (!wt) {
                error(a.span, "bad-assign-target",
                      "cannot assign to '" + a.target + "' in " + where);
            }
            auto vt = infer(a.value, read_type, nullptr, where);
            if (wt && vt && *wt != *vt)
                error(a.span, "type-mismatch",
                      "assignment to " + std::string(to_string(*wt)) + " variable '" + a.target +
                          "' from " + to_string(*vt) + " expression in " + where);
        }
    }

    // ---- atoms ---------------------------------------------------------------

    void check_atom(const AtomDef& a) {
        const std::string where_atom = "atom '" + a.name + "'";
        std::set<std::string> names;
        for (const auto& p : a.ports) {
            check_ident(p.name, p.span, "port name");
            if (!names.insert(p.name).second)
                error(p.span, "dup-port", "duplicate port '" + p.name + "' in " + where_atom);
            for (const auto& v : p.exported_vars)
                if (!a.find_var(v))
                    error(p.span, "unknown-variable",
                          "port '" + p.name + "' exports undeclared variable '" + v + "'");
        }
        std::set<std::string> vars;
        for (const auto& v : a.vars) {
            check_ident(v.name, v.span, "variable name");
            if (!vars.insert(v.name).second)
                error(v.span, "dup-var", "duplicate variable '" + v.name + "' in " + where_atom);
        }
        std::set<std::string> states;
        for (const auto& s : a.states)
            if (!states.insert(s).second)
                error(a.span, "dup-state", "duplicate state '" + s + "' in " + where_atom);
        if (a.states.empty())
            error(a.span, "no-states", where_atom + " declares no states");
        if (!a.init) error(a.span, "no-init", where_atom + " has no init specification");

        VarTypeFn own_var = [&](const std::string& path) -> std::optional<ValueType> {
            const VarDecl* v = a.find_var(path);
            if (!v) return std::nullopt;
            return v->type;
        };
        if (a.init) {
            if (!a.has_state(a.init->target))
                error(a.init->span, "unknown-state",
                      "init targets undeclared state '" + a.init->target + "'");
            check_guard(a.init->guard, own_var, nullptr, "init of " + where_atom);
            check_action(a.init->action, own_var, own_var, "init of " + where_atom);
        }
        for (const auto& t : a.transitions) {
            const std::string where = "transition on '" + t.port + "' of " + where_atom;
            if (!a.find_port(t.port))
                error(t.span, "unknown-port", "transition references undeclared port '" + t.port + "'");
            if (!a.has_state(t.source))
                error(t.span, "unknown-state", "transition from undeclared state '" + t.source + "'");
            if (!a.has_state(t.target))
                error(t.span, "unknown-state", "transition to undeclared state '" + t.target + "'");
            check_guard(t.guard, own_var, nullptr, where);
            check_action(t.action, own_var, own_var, where);
        }
    }

    // ---- compounds -----------------------------------------------------------

    struct Leaf {
        std::string instance_path;  // relative to the compound being validated
        const AtomDef* atom;
        const PortDecl* port;
    };

    // Collects the atom-port leaves of the connector tree rooted at `conn`,
    // following inner-connector ends and child-compound exports.
    bool collect_leaves(const CompoundDef& comp, const ConnectorDef& conn, const std::string& prefix,
                        std::vector<Leaf>& out, std::set<const ConnectorDef*>& on_path, int depth) {
        if (depth > 32) return false;
        if (!on_path.insert(&conn).second) {
            error(conn.span, "connector-cycle",
                  "connector '" + conn.name + "' participates in a hierarchy cycle");
            return false;
        }
        bool ok = true;
        for (const auto& end : conn.ends) {
            auto segs = split_path(end.path);
            if (segs.size() != 2) {
                error(end.span, "bad-end",
                      "connector end '" + end.path + "' must be 'component.port' or 'connector.port'");
                ok = false;
                continue;
            }
            const InstanceDecl* inst = comp.find_component(segs[0]);
            const ConnectorDef* sibling = comp.find_connector(segs[0]);
            if (inst && sibling) {
                error(end.span, "ambiguous-end",
                      "'" + segs[0] + "' names both a component and a connector");
                ok = false;
                continue;
            }
            if (inst) {
                if (const AtomDef* atom = model_.find_atom(inst->type)) {
                    const PortDecl* port = atom->find_port(segs[1]);
                    if (!port) {
                        error(end.span, "unknown-port",
                              "atom '" + inst->type + "' has no port '" + segs[1] + "'");
                        ok = false;
                        continue;
                    }
                    out.push_back({prefix + segs[0], atom, port});
                } else if (const CompoundDef* sub = model_.find_compound(inst->type)) {
                    if (is_recursive(sub->name)) { ok = false; continue; }
                    bool found = false;
                    for (const auto& exp : sub->exports) {
                        if (exp != segs[1]) continue;
                        found = true;
                        for (const auto& sc : sub->connectors) {
                            if (sc.exported && sc.exported->port_name == exp) {
                                std::set<const ConnectorDef*> sub_path;
                                ok &= collect_leaves(*sub, sc, prefix + segs[0] + ".", out, sub_path,
                                                     depth + 1);
                            }
                        }
                    }
                    if (!found) {
                        error(end.span, "unknown-port",
                              "compound '" + inst->type + "' does not export port '" + segs[1] + "'");
                        ok = false;
                    }
                } else {
                    error(end.span, "unknown-type",
                          "component '" + segs[0] + "' has undefined type '" + inst->type + "'");
                    ok = false;
                }
            } else if (sibling) {
                if (!sibling->exported || sibling->exported->port_name != segs[1]) {
                    error(end.span, "unknown-port",
                          "connector '" + segs[0] + "' does not export port '" + segs[1] + "'");
                    ok = false;
                    continue;
                }
                ok &= collect_leaves(comp, *sibling, prefix, out, on_path, depth + 1);
            } else {
                error(end.span, "unknown-component",
                      "connector end references unknown component or connector '" + segs[0] + "'");
                ok = false;
            }
        }
        on_path.erase(&conn);
        return ok;
    }

    void check_compound(const CompoundDef& comp) {
        const std::string where_comp = "compound '" + comp.name + "'";
        std::set<std::string> inst_names;
        for (const auto& inst : comp.components) {
            check_ident(inst.name, inst.span, "component instance name");
            if (!inst_names.insert(inst.name).second)
                error(inst.span, "dup-component",
                      "duplicate component '" + inst.name + "' in " + where_comp);
            if (!model_.find_atom(inst.type) && !model_.find_compound(inst.type))
                error(inst.span, "unknown-type",
                      "component '" + inst.name + "' has undefined type '" + inst.type + "'");
        }
        if (is_recursive(comp.name)) return;

        std::set<std::string> conn_names;
        std::map<const ConnectorDef*, int> consumers;
        for (const auto& conn : comp.connectors) {
            check_ident(conn.name, conn.span, "connector name");
            if (!conn_names.insert(conn.name).second)
                error(conn.span, "dup-connector",
                      "duplicate connector '" + conn.name + "' in " + where_comp);
            if (inst_names.count(conn.name))
                error(conn.span, "name-clash",
                      "connector '" + conn.name + "' shares its name with a component instance");
            if (conn.ends.empty())
                error(conn.span, "empty-connector", "connector '" + conn.name + "' has no ends");
            check_connector_body(comp, conn);
            for (const auto& end : conn.ends) {
                auto segs = split_path(end.path);
                if (segs.size() == 2)
                    if (const ConnectorDef* sib = comp.find_connector(segs[0])) consumers[sib]++;
            }
            std::size_t triggers = 0;
            for (const auto& e : conn.ends) triggers += e.trigger ? 1 : 0;
            if (triggers > 0 && conn.ends.size() > 12)
                error(conn.span, "broadcast-too-wide",
                      "connector '" + conn.name + "' has " + std::to_string(conn.ends.size()) +
                          " ends with triggers; the interaction set would be too large (max 12)");
        }
        for (const auto& [conn, count] : consumers) {
            if (count > 1)
                error(conn->span, "two-parents",
                      "connector '" + conn->name + "' is used by " + std::to_string(count) +
                          " parent connectors; the hierarchy must be a tree");
        }

        // one-port-per-atom across each connector tree, checked on the trees'
        // top-level generators (connectors nobody consumes)
        for (const auto& conn : comp.connectors) {
            if (consumers.count(&conn)) continue;
            std::vector<Leaf> leaves;
            std::set<const ConnectorDef*> on_path;
            if (!collect_leaves(comp, conn, "", leaves, on_path, 0)) continue;
            std::set<std::string> seen;
            for (const auto& leaf : leaves) {
                if (!seen.insert(leaf.instance_path).second)
                    error(conn.span, "one-port-per-atom",
                          "connector '" + conn.name + "' references more than one port of atom '" +
                              leaf.instance_path + "'; a connector may use at most one port per "
                              "atomic component");
            }
        }

        std::set<std::string> exports;
        for (const auto& exp : comp.exports) {
            if (!exports.insert(exp).second)
                error(comp.span, "dup-export", "port '" + exp + "' exported twice by " + where_comp);
            int providers = 0;
            const ConnectorDef* provider = nullptr;
            for (const auto& conn : comp.connectors)
                if (conn.exported && conn.exported->port_name == exp) {
                    ++providers;
                    provider = &conn;
                }
            if (providers == 0)
                error(comp.span, "unknown-export",
                      where_comp + " exports '" + exp + "' but no connector exports that port");
            else if (providers > 1)
                error(comp.span, "ambiguous-export",
                      "port '" + exp + "' is exported by more than one connector in " + where_comp);
            else if (consumers.count(provider))
                error(provider->span, "two-parents",
                      "connector '" + provider->name +
                          "' is consumed by a sibling connector and also exported by the compound");
        }

        check_priorities(comp.priorities, where_comp,
                         [&](const std::string& n) { return comp.find_connector(n) != nullptr; });
    }

    /// Scope of a connector's guard/up/down: its own variables (bare names)
    /// plus `end.var` for variables exported through the referenced end port.
    void check_connector_body(const CompoundDef& comp, const ConnectorDef& conn) {
        const std::string where = "connector '" + conn.name + "'";
        std::set<std::string> own;
        for (const auto& v : conn.vars) {
            check_ident(v.name, v.span, "connector variable");
            if (!own.insert(v.name).second)
                error(v.span, "dup-var", "duplicate variable '" + v.name + "' in " + where);
        }
        if (conn.exported)
            for (const auto& v : conn.exported->vars)
                if (!own.count(v))
                    error(conn.exported->span, "unknown-variable",
                          "exported port '" + conn.exported->port_name +
                              "' exports undeclared connector variable '" + v + "'");

        auto end_var_type = [&](const std::string& first,
                                const std::string& var) -> std::optional<ValueType> {
            for (const auto& end : conn.ends) {
                auto segs = split_path(end.path);
                if (segs.size() != 2 || segs[0] != first) continue;
                if (const InstanceDecl* inst = comp.find_component(segs[0])) {
                    if (const AtomDef* atom = model_.find_atom(inst->type)) {
                        const PortDecl* port = atom->find_port(segs[1]);
                        if (!port) return std::nullopt;
                        for (const auto& ev : port->exported_vars)
                            if (ev == var)
                                return atom->find_var(var) ? std::optional(atom->find_var(var)->type)
                                                           : std::nullopt;
                        return std::nullopt;
                    }
                    if (const CompoundDef* sub = model_.find_compound(inst->type)) {
                        for (const auto& sc : sub->connectors)
                            if (sc.exported && sc.exported->port_name == segs[1])
                                for (const auto& ev : sc.exported->vars)
                                    if (ev == var) {
                                        const VarDecl* vd = nullptr;
                                        for (const auto& cv : sc.vars)
                                            if (cv.name == var) vd = &cv;
                                        return vd ? std::optional(vd->type) : std::nullopt;
                                    }
                        return std::nullopt;
                    }
                }
                if (const ConnectorDef* sib = comp.find_connector(segs[0])) {
                    if (!sib->exported || sib->exported->port_name != segs[1]) return std::nullopt;
                    for (const auto& ev : sib->exported->vars)
                        if (ev == var) {
                            for (const auto& cv : sib->vars)
                                if (cv.name == var) return cv.type;
                            return std::nullopt;
                        }
                    return std::nullopt;
                }
            }
            return std::nullopt;
        };

        VarTypeFn read_type = [&](const std::string& path) -> std::optional<ValueType> {
            auto segs = split_path(path);
            if (segs.size() == 1) {
                for (const auto& v : conn.vars)
                    if (v.name == path) return v.type;
                return std::nullopt;
            }
            if (segs.size() == 2) return end_var_type(segs[0], segs[1]);
            return std::nullopt;
        };
        VarTypeFn write_own = [&](const std::string& path) -> std::optional<ValueType> {
            auto segs = split_path(path);
            if (segs.size() != 1) return std::nullopt;
            for (const auto& v : conn.vars)
                if (v.name == path) return v.type;
            return std::nullopt;
        };
        VarTypeFn write_down = [&](const std::string& path) -> std::optional<ValueType> {
            if (auto t = write_own(path)) return t;
            auto segs = split_path(path);
            if (segs.size() == 2) return end_var_type(segs[0], segs[1]);
            return std::nullopt;
        };

        check_guard(conn.guard, read_type, nullptr, where);
        // upstream computes into connector variables only
        check_action(conn.up, read_type, write_own, "up flow of " + where);
        check_action(conn.down, read_type, write_down, "down flow of " + where);
    }

    void check_priorities(const std::vector<PriorityRule>& rules, const std::string& where,
                          const std::function<bool(const std::string&)>& exists) {
        std::map<std::string, std::vector<std::string>> succ;
        for (const auto& r : rules) {
            if (!exists(r.low))
                error(r.span, "unknown-connector",
                      "priority rule references unknown connector '" + r.low + "' in " + where);
            if (!exists(r.high))
                error(r.span, "unknown-connector",
                      "priority rule references unknown connector '" + r.high + "' in " + where);
            succ[r.low].push_back(r.high);
        }
        // cycle detection over connector names (masks ignored; conservative)
        std::set<std::string> done;
        for (const auto& [start, _] : succ) {
            if (done.count(start)) continue;
            std::vector<std::string> stack{start};
            std::set<std::string> on_stack{start};
            std::function<bool(const std::string&)> dfs = [&](const std::string& n) -> bool {
                for (const auto& next : succ[n]) {
                    if (on_stack.count(next)) {
                        // report the cycle in walk order
                        std::string msg = "priority cycle ";
                        bool in_cycle = false;
                        for (const auto& s : stack) {
                            if (s == next) in_cycle = true;
                            if (in_cycle) msg += s + " -> ";
                        }
                        msg += next;
                        SourceSpan sp;
                        for (const auto& r : rules)
                            if (r.low == n && r.high == next) sp = r.span;
                        error(sp, "priority-cycle", msg);
                        return true;
                    }
                    if (done.count(next)) continue;
                    stack.push_back(next);
                    on_stack.insert(next);
                    if (dfs(next)) return true;
                    on_stack.erase(next);
                    stack.pop_back();
                }
                done.insert(n);
                return false;
            };
            if (dfs(start)) break;  // one cycle diagnostic is enough
        }
    }

    // ---- architectures -------------------------------------------------------

    void check_architecture(const ArchitectureDef& arch) {
        for (const auto& part : arch.parts) check_arch_part(arch, part);
    }

    void check_arch_part(const ArchitectureDef& arch, const ArchPart& part) {
        const std::string where_arch = "architecture '" + part.source + "'";
        std::set<std::string> params;
        for (const auto& p : part.params) {
            check_ident(p.name, p.span, "parameter name");
            if (!params.insert(p.name).second)
                error(p.span, "dup-param", "duplicate parameter '" + p.name + "' in " + where_arch);
            std::set<std::string> ports(p.interface_ports.begin(), p.interface_ports.end());
            if (ports.size() != p.interface_ports.size())
                error(p.span, "dup-port", "parameter '" + p.name + "' lists a port twice");
        }
        std::set<std::string> coords;
        for (const auto& c : part.coordinators) {
            check_ident(c.name, c.span, "coordinator name");
            if (!coords.insert(c.name).second)
                error(c.span, "dup-coordinator",
                      "duplicate coordinator '" + c.name + "' in " + where_arch);
            if (params.count(c.name))
                error(c.span, "name-clash",
                      "coordinator '" + c.name + "' shares its name with a parameter");
            if (!model_.find_atom(c.type))
                error(c.span, "unknown-type",
                      "coordinator '" + c.name + "' has undefined atom type '" + c.type + "'");
        }

        auto find_param = [&](const std::string& n) -> const ArchParam* {
            for (const auto& p : part.params)
                if (p.name == n) return &p;
            return nullptr;
        };
        auto find_coord = [&](const std::string& n) -> const CoordinatorDecl* {
            for (const auto& c : part.coordinators)
                if (c.name == n) return &c;
            return nullptr;
        };

        std::set<std::string> conn_names;
        for (const auto& conn : part.connectors) {
            if (!conn_names.insert(conn.name).second)
                error(conn.span, "dup-connector",
                      "duplicate connector '" + conn.name + "' in " + where_arch);
            if (conn.exported)
                error(conn.span, "arch-hierarchy",
                      "architecture glue connectors must be flat (no 'export' clause)");
            std::set<std::string> used_components;
            for (const auto& end : conn.ends) {
                auto segs = split_path(end.path);
                if (segs.size() != 2) {
                    error(end.span, "bad-end",
                          "architecture connector end '" + end.path + "' must be 'name.port'");
                    continue;
                }
                if (!used_components.insert(segs[0]).second)
                    error(end.span, "one-port-per-atom",
                          "connector '" + conn.name + "' uses more than one port of '" + segs[0] + "'");
                if (const ArchParam* p = find_param(segs[0])) {
                    bool in_interface = false;
                    for (const auto& port : p->interface_ports) in_interface |= port == segs[1];
                    if (!in_interface)
                        error(end.span, "unknown-port",
                              "port '" + segs[1] + "' is not in the interface of parameter '" +
                                  segs[0] + "'");
                } else if (const CoordinatorDecl* c = find_coord(segs[0])) {
                    if (const AtomDef* atom = model_.find_atom(c->type))
                        if (!atom->find_port(segs[1]))
                            error(end.span, "unknown-port",
                                  "coordinator atom '" + c->type + "' has no port '" + segs[1] + "'");
                } else {
                    error(end.span, "unknown-component",
                          "connector end references unknown parameter or coordinator '" + segs[0] +
                              "'");
                }
            }
            // Coordinator-side dataflow is checkable now; parameter-side
            // variables are operand-supplied and checked at application.
        }

        check_priorities(part.priorities, where_arch, [&](const std::string& n) {
            return conn_names.count(n) > 0;
        });

        for (const auto& prop_name : part.properties) {
            const PropertyDef* prop = model_.find_property(prop_name);
            if (!prop) {
                error(arch.span, "unknown-property",
                      where_arch + " references undefined property '" + prop_name + "'");
                continue;
            }
            VarTypeFn var_type = [&](const std::string& path) -> std::optional<ValueType> {
                auto segs = split_path(path);
                if (segs.size() != 2) return std::nullopt;
                if (find_param(segs[0])) return ValueType::Int;  // operand-supplied; deferred
                if (const CoordinatorDecl* c = find_coord(segs[0]))
                    if (const AtomDef* atom = model_.find_atom(c->type))
                        if (const VarDecl* v = atom->find_var(segs[1])) return v->type;
                return std::nullopt;
            };
            StateTestFn state_test = [&](const std::string& path,
                                         const std::string& state) -> std::optional<bool> {
                if (find_param(path)) return std::nullopt;  // deferred to application
                if (const CoordinatorDecl* c = find_coord(path))
                    if (const AtomDef* atom = model_.find_atom(c->type)) return atom->has_state(state);
                return false;
            };
            // Parameter-side reads type as int pessimistically; mismatches on
            // operand variables surface when the architecture is applied.
            auto t = infer(prop->predicate, var_type, state_test,
                           "characteristic property '" + prop_name + "'");
            if (t && *t != ValueType::Bool)
                error(prop->span, "type-mismatch",
                      "property '" + prop_name + "' is not boolean");
        }
    }

    // ---- properties ----------------------------------------------------------

    void check_properties() {
        std::set<std::string> arch_props;
        for (const auto& arch : model_.architectures)
            for (const auto& part : arch.parts)
                for (const auto& p : part.properties) arch_props.insert(p);

        const CompoundDef* root = model_.root();
        for (const auto& prop : model_.properties) {
            if (arch_props.count(prop.name)) continue;  // validated in architecture scope
            const std::string where = "property '" + prop.name + "'";
            VarTypeFn var_type = [&](const std::string& path) -> std::optional<ValueType> {
                return root ? resolve_instance_var(*root, split_path(path), 0) : std::nullopt;
            };
            StateTestFn state_test = [&](const std::string& path,
                                         const std::string& state) -> std::optional<bool> {
                if (!root) return false;
                const AtomDef* atom = resolve_instance_atom(*root, split_path(path), 0);
                return atom != nullptr && atom->has_state(state);
            };
            auto t = infer(prop.predicate, var_type, state_test, where);
            if (t && *t != ValueType::Bool)
                error(prop.span, "type-mismatch", where + " is not boolean");
        }
    }

    const AtomDef* resolve_instance_atom(const CompoundDef& comp,
                                         const std::vector<std::string>& segs, std::size_t i) {
        if (i >= segs.size()) return nullptr;
        const InstanceDecl* inst = comp.find_component(segs[i]);
        if (!inst) return nullptr;
        if (const AtomDef* atom = model_.find_atom(inst->type))
            return i + 1 == segs.size() ? atom : nullptr;
        if (const CompoundDef* sub = model_.find_compound(inst->type))
            if (!is_recursive(sub->name)) return resolve_instance_atom(*sub, segs, i + 1);
        return nullptr;
    }

    std::optional<ValueType> resolve_instance_var(const CompoundDef& comp,
                                                  const std::vector<std::string>& segs,
                                                  std::size_t i) {
        if (segs.size() < 2 || i + 2 > segs.size()) return std::nullopt;
        if (i + 2 == segs.size()) {
            const InstanceDecl* inst = comp.find_component(segs[i]);
            if (!inst) return std::nullopt;
            if (const AtomDef* atom = model_.find_atom(inst->type))
                if (const VarDecl* v = atom->find_var(segs[i + 1])) return v->type;
            return std::nullopt;
        }
        const InstanceDecl* inst = comp.find_component(segs[i]);
        if (!inst) return std::nullopt;
        if (const CompoundDef* sub = model_.find_compound(inst->type))
            if (!is_recursive(sub->name)) return resolve_instance_var(*sub, segs, i + 1);
        return std::nullopt;
    }
};

}  // namespace detail

/// Checks every model invariant: namespaces, name resolution, expression
/// typing, one-port-per-atom per connector tree, priority acyclicity, export
/// consistency. Diagnostics are data; an empty result means well-formed.
inline std::vector<Diagnostic> validate_model(const Model& m) {
    detail::Validator v(m);
    return v.run();
}

}  // namespace bip
