// Copyright (c) bipkit contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "bip/model.hpp"
#include "bip/program.hpp"

namespace bip {

class ElaborationError : public std::runtime_error {
public:
    explicit ElaborationError(const std::string& what) : std::runtime_error(what) {}
};

/// Snapshot of one global configuration: control state per atom instance plus
/// the flat variable store (atom-major slot layout).
struct Config {
    std::vector<std::uint32_t> state;
    std::vector<Value> vars;
    bool operator==(const Config&) const = default;
};

struct AtomInstance {
    std::string path;
    const AtomDef* def = nullptr;
    std::uint32_t var_base = 0;
    std::uint32_t num_vars = 0;
    std::uint32_t init_state = 0;
    Program init_guard;
    Program init_action;

    struct CompiledTransition {
        std::uint32_t port = 0;
        std::uint32_t source = 0;
        std::uint32_t target = 0;
        bool guard_const_true = true;
        Program guard;
        Program action;
    };
    std::vector<CompiledTransition> transitions;  // declaration order
    // [port][state] -> transition indices, declaration order
    std::vector<std::vector<std::vector<std::uint32_t>>> by_port_state;

    std::uint32_t state_index(const std::string& name) const {
        for (std::uint32_t i = 0; i < def->states.size(); ++i)
            if (def->states[i] == name) return i;
        throw ElaborationError("unknown state " + name + " in " + path);
    }
    std::uint32_t port_index(const std::string& name) const {
        for (std::uint32_t i = 0; i < def->ports.size(); ++i)
            if (def->ports[i].name == name) return i;
        throw ElaborationError("unknown port " + name + " in " + path);
    }
};

struct VarInfo {
    std::string path;  // "instance.var"
    ValueType type = ValueType::Int;
    std::uint32_t atom = 0;
};

/// Connector instance in the elaborated hierarchy.
struct ConnNode {
    std::string path;
    const ConnectorDef* def = nullptr;
    struct End {
        bool trigger = false;
        bool is_inner = false;
        std::uint32_t atom = 0;   // leaf: atom instance index
        std::uint32_t port = 0;   // leaf: port index in atom def
        std::uint32_t inner = 0;  // inner: node index
        std::string label;        // leaf: "instancepath.port"; inner: node path
        std::string def_first;    // first segment of the end path in the definition
    };
    std::vector<End> ends;
    bool consumed = false;
    std::uint32_t tmp_base = 0;  // scratch slot of first connector variable
};

/// One (generator connector, member) pair: the engine's unit of execution.
struct Interaction {
    std::uint32_t id = 0;
    std::uint32_t node = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> leaves;  // (atom, port), label-sorted
    std::vector<std::string> port_labels;                         // sorted
    std::vector<std::pair<std::uint32_t, std::uint64_t>> node_masks;

    Program up_guard;  // up flows then conjoined guards; leaves bool
    Program up_down;   // up flows then down flows
    bool trivially_enabled = false;  // no flows, no guard
    bool guard_blocked = false;      // guard reads a non-participating end
    bool guard_const_true = true;    // every guard along the tree is syntactically true
    bool flows_have_div = false;     // up flow contains / or %
};

struct SystemWarning {
    std::string message;
};

struct System {
    const Model* model = nullptr;
    const CompoundDef* root = nullptr;

    std::vector<AtomInstance> atoms;  // sorted by instance path
    std::vector<VarInfo> vars;
    std::vector<ConnNode> nodes;
    std::vector<std::uint32_t> generators;  // node indices, elaboration order
    std::vector<Interaction> interactions;  // grouped by generator
    std::vector<std::vector<std::uint32_t>> dominators;  // interaction id -> dominating ids (closed)
    // per-node member shapes, for interaction_set queries on any connector
    struct MemberShape {
        std::vector<std::pair<std::uint32_t, std::uint32_t>> leaves;
        std::vector<std::pair<std::uint32_t, std::uint64_t>> node_masks;
        std::vector<std::string> labels;  // sorted leaf labels
    };
    std::vector<std::vector<MemberShape>> node_members;

    std::uint32_t atom_index(const std::string& path) const {
        auto it = std::lower_bound(atoms.begin(), atoms.end(), path,
                                   [](const AtomInstance& a, const std::string& p) { return a.path < p; });
        if (it == atoms.end() || it->path != path)
            throw ElaborationError("unknown atom instance " + path);
        return std::uint32_t(it - atoms.begin());
    }
    const ConnNode* find_node(const std::string& path) const {
        for (const auto& n : nodes)
            if (n.path == path) return &n;
        return nullptr;
    }

    /// The interaction set of a connector (by instance path): the sets of
    /// participating "instance.port" labels, canonically sorted.
    std::vector<std::vector<std::string>> interaction_set(const std::string& connector_path) const {
        for (std::uint32_t n = 0; n < nodes.size(); ++n) {
            if (nodes[n].path != connector_path) continue;
            std::vector<std::vector<std::string>> out;
            for (const auto& m : node_members[n]) out.push_back(m.labels);
            return out;
        }
        throw ElaborationError("unknown connector " + connector_path);
    }

    Config initial_defaults() const {
        Config c;
        c.state.assign(atoms.size(), 0);
        c.vars.reserve(vars.size());
        for (const auto& v : vars) c.vars.push_back(default_value(v.type));
        return c;
    }

    /// Canonical byte encoding of a configuration. Atom instances are sorted
    /// by path and variables laid out atom-major, so the encoding is the
    /// sorted (instance-path, state, values) tuple sequence.
    std::string encode(const Config& c) const {
        std::string out;
        out.reserve(c.state.size() * 4 + c.vars.size() * 9);
        auto put32 = [&](std::uint32_t v) {
            char b[4];
            std::memcpy(b, &v, 4);
            out.append(b, 4);
        };
        for (std::uint32_t a = 0; a < atoms.size(); ++a) {
            put32(c.state[a]);
            for (std::uint32_t s = atoms[a].var_base; s < atoms[a].var_base + atoms[a].num_vars; ++s) {
                const Value& v = c.vars[s];
                out.push_back(is_int(v) ? 'i' : 'b');
                std::uint64_t bits = is_int(v) ? std::uint64_t(as_int(v)) : (as_bool(v) ? 1 : 0);
                char b[8];
                std::memcpy(b, &bits, 8);
                out.append(b, 8);
            }
        }
        return out;
    }
};

namespace detail {

inline bool action_references_div(const ExprPtr& e) {
    if (!e) return false;
    if (e->kind == Expr::Kind::Binary &&
        (e->bin == BinaryOp::Div || e->bin == BinaryOp::Mod))
        return true;
    return action_references_div(e->lhs) || action_references_div(e->rhs);
}

inline void collect_var_paths(const ExprPtr& e, std::vector<std::string>& out) {
    if (!e) return;
    if (e->kind == Expr::Kind::VarRead) out.push_back(e->path);
    collect_var_paths(e->lhs, out);
    collect_var_paths(e->rhs, out);
}

class Elaborator {
public:
    Elaborator(const Model& m, const CompoundDef* root) : model_(m), root_(root) {}

    System run() {
        System sys;
        sys.model = &model_;
        sys.root = root_;
        if (root_) collect_atoms(*root_, "");
        std::sort(proto_atoms_.begin(), proto_atoms_.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::uint32_t i = 0; i < proto_atoms_.size(); ++i) {
            if (i > 0 && proto_atoms_[i].first == proto_atoms_[i - 1].first)
                throw ElaborationError("duplicate instance path " + proto_atoms_[i].first);
            AtomInstance inst;
            inst.path = proto_atoms_[i].first;
            inst.def = proto_atoms_[i].second;
            sys.atoms.push_back(std::move(inst));
        }
        assign_var_slots(sys);
        compile_atoms(sys);
        if (root_) {
            Scope scope = elaborate_compound(sys, *root_, "");
            (void)scope;
        }
        build_members(sys);
        build_interactions(sys);
        build_priorities(sys);
        return sys;
    }

private:
    const Model& model_;
    const CompoundDef* root_;
    std::vector<std::pair<std::string, const AtomDef*>> proto_atoms_;

    struct Scope {
        // name -> atom instance index (for atom components)
        std::map<std::string, std::uint32_t> atom_children;
        // name -> child scope exports: exported port name -> node index
        std::map<std::string, std::map<std::string, std::uint32_t>> compound_exports;
        // connector name -> node index
        std::map<std::string, std::uint32_t> connectors;
        // exported port name -> node index (own connectors)
        std::map<std::string, std::uint32_t> exports;
    };

    struct InstancedRule {
        std::uint32_t low_node, high_node;
        std::vector<std::string> low_ports, high_ports;
    };
    std::vector<InstancedRule> rules_;

    const AtomDef* atom_type(const std::string& name) const { return model_.find_atom(name); }
    const CompoundDef* compound_type(const std::string& name) const {
        return model_.find_compound(name);
    }

    void collect_atoms(const CompoundDef& comp, const std::string& prefix) {
        for (const auto& inst : comp.components) {
            std::string path = prefix.empty() ? inst.name : prefix + "." + inst.name;
            if (const AtomDef* atom = atom_type(inst.type)) {
                proto_atoms_.emplace_back(path, atom);
            } else if (const CompoundDef* sub = compound_type(inst.type)) {
                collect_atoms(*sub, path);
            } else {
                throw ElaborationError("undefined component type " + inst.type);
            }
        }
    }

    void assign_var_slots(System& sys) {
        std::uint32_t slot = 0;
        for (std::uint32_t a = 0; a < sys.atoms.size(); ++a) {
            AtomInstance& inst = sys.atoms[a];
            inst.var_base = slot;
            inst.num_vars = std::uint32_t(inst.def->vars.size());
            for (const auto& v : inst.def->vars) {
                sys.vars.push_back({inst.path + "." + v.name, v.type, a});
                ++slot;
            }
        }
    }

    VarResolver atom_resolver(const System& sys, const AtomInstance& inst) const {
        return [&sys, &inst](const std::string& path) -> std::optional<Slot> {
            for (std::uint32_t i = 0; i < inst.def->vars.size(); ++i)
                if (inst.def->vars[i].name == path)
                    return Slot{Slot::Kind::Var, inst.var_base + i};
            return std::nullopt;
        };
    }

    void compile_atoms(System& sys) {
        for (auto& inst : sys.atoms) {
            const AtomDef& def = *inst.def;
            if (!def.init) throw ElaborationError("atom " + def.name + " has no init");
            VarResolver res = atom_resolver(sys, inst);
            {
                ProgramBuilder b(res);
                b.guard(def.init->guard);
                inst.init_guard = b.take();
            }
            {
                ProgramBuilder b(res);
                for (const auto& a : def.init->action) b.assign(a.target, *a.value);
                inst.init_action = b.take();
            }
            inst.init_state = inst.state_index(def.init->target);
            inst.by_port_state.assign(def.ports.size(),
                                      std::vector<std::vector<std::uint32_t>>(def.states.size()));
            for (const auto& t : def.transitions) {
                AtomInstance::CompiledTransition ct;
                ct.port = inst.port_index(t.port);
                ct.source = inst.state_index(t.source);
                ct.target = inst.state_index(t.target);
                ct.guard_const_true = is_const_true(t.guard);
                {
                    ProgramBuilder b(res);
                    b.guard(t.guard);
                    ct.guard = b.take();
                }
                {
                    ProgramBuilder b(res);
                    for (const auto& a : t.action) b.assign(a.target, *a.value);
                    ct.action = b.take();
                }
                inst.by_port_state[ct.port][ct.source].push_back(
                    std::uint32_t(inst.transitions.size()));
                inst.transitions.push_back(std::move(ct));
            }
        }
    }

    Scope elaborate_compound(System& sys, const CompoundDef& comp, const std::string& prefix) {
        Scope scope;
        for (const auto& inst : comp.components) {
            std::string path = prefix.empty() ? inst.name : prefix + "." + inst.name;
            if (atom_type(inst.type)) {
                scope.atom_children[inst.name] = sys.atom_index(path);
            } else if (const CompoundDef* sub = compound_type(inst.type)) {
                Scope child = elaborate_compound(sys, *sub, path);
                scope.compound_exports[inst.name] = child.exports;
            }
        }
        // create nodes first so sibling references resolve regardless of order
        std::map<std::string, std::uint32_t> own;
        for (const auto& conn : comp.connectors) {
            ConnNode node;
            node.path = prefix.empty() ? conn.name : prefix + "." + conn.name;
            node.def = &conn;
            own[conn.name] = std::uint32_t(sys.nodes.size());
            sys.nodes.push_back(std::move(node));
        }
        scope.connectors = own;
        for (const auto& conn : comp.connectors) {
            ConnNode& node = sys.nodes[own[conn.name]];
            for (const auto& end : conn.ends) {
                auto segs = split_path(end.path);
                if (segs.size() != 2) throw ElaborationError("bad connector end " + end.path);
                ConnNode::End e;
                e.trigger = end.trigger;
                e.def_first = segs[0];
                if (auto it = scope.atom_children.find(segs[0]); it != scope.atom_children.end()) {
                    const AtomInstance& atom = sys.atoms[it->second];
                    e.is_inner = false;
                    e.atom = it->second;
                    e.port = atom.port_index(segs[1]);
                    e.label = atom.path + "." + segs[1];
                } else if (auto ct = scope.compound_exports.find(segs[0]);
                           ct != scope.compound_exports.end()) {
                    auto pt = ct->second.find(segs[1]);
                    if (pt == ct->second.end())
                        throw ElaborationError("compound " + segs[0] + " does not export " + segs[1]);
                    e.is_inner = true;
                    e.inner = pt->second;
                    e.label = sys.nodes[pt->second].path;
                    sys.nodes[pt->second].consumed = true;
                } else if (auto st = own.find(segs[0]); st != own.end()) {
                    const ConnNode& sib = sys.nodes[st->second];
                    if (!sib.def->exported || sib.def->exported->port_name != segs[1])
                        throw ElaborationError("connector " + segs[0] + " does not export " + segs[1]);
                    e.is_inner = true;
                    e.inner = st->second;
                    e.label = sib.path;
                    sys.nodes[st->second].consumed = true;
                } else {
                    throw ElaborationError("unresolved connector end " + end.path);
                }
                node.ends.push_back(std::move(e));
            }
        }
        for (const auto& exp : comp.exports) {
            for (const auto& conn : comp.connectors)
                if (conn.exported && conn.exported->port_name == exp)
                    scope.exports[exp] = own[conn.name];
        }
        for (const auto& rule : comp.priorities) {
            auto lo = own.find(rule.low);
            auto hi = own.find(rule.high);
            if (lo == own.end() || hi == own.end())
                throw ElaborationError("priority rule references unknown connector");
            rules_.push_back({lo->second, hi->second, rule.low_ports, rule.high_ports});
        }
        return scope;
    }

    // ---- member enumeration --------------------------------------------------

    static constexpr std::size_t kMaxMembersPerConnector = 4096;

    void build_members(System& sys) {
        sys.node_members.assign(sys.nodes.size(), {});
        std::vector<int> done(sys.nodes.size(), 0);
        for (std::uint32_t n = 0; n < sys.nodes.size(); ++n) enumerate_node(sys, n, done);
    }

    const std::vector<System::MemberShape>& enumerate_node(System& sys, std::uint32_t n,
                                                           std::vector<int>& done) {
        if (done[n]) return sys.node_members[n];
        done[n] = 1;
        const ConnNode& node = sys.nodes[n];
        std::size_t nends = node.ends.size();
        if (nends > 63) throw ElaborationError("connector " + node.path + " has too many ends");
        bool any_trigger = false;
        for (const auto& e : node.ends) any_trigger |= e.trigger;

        std::vector<std::uint64_t> masks;
        if (!any_trigger) {
            masks.push_back(nends == 64 ? ~0ull : ((1ull << nends) - 1));
        } else {
            for (std::uint64_t mask = 1; mask < (1ull << nends); ++mask) {
                bool has_trigger = false;
                for (std::size_t i = 0; i < nends; ++i)
                    if ((mask >> i) & 1 && node.ends[i].trigger) has_trigger = true;
                if (has_trigger) masks.push_back(mask);
            }
        }

        std::vector<System::MemberShape> members;
        for (std::uint64_t mask : masks) {
            std::vector<System::MemberShape> partial(1);
            partial[0].node_masks.emplace_back(n, mask);
            for (std::size_t i = 0; i < nends; ++i) {
                if (!((mask >> i) & 1)) continue;
                const auto& end = node.ends[i];
                if (!end.is_inner) {
                    for (auto& p : partial) p.leaves.emplace_back(end.atom, end.port);
                } else {
                    const auto& inner_members = enumerate_node(sys, end.inner, done);
                    if (inner_members.empty())
                        throw ElaborationError("inner connector with empty interaction set");
                    std::vector<System::MemberShape> next;
                    next.reserve(partial.size() * inner_members.size());
                    for (const auto& base : partial) {
                        for (const auto& im : inner_members) {
                            System::MemberShape combined = base;
                            combined.leaves.insert(combined.leaves.end(), im.leaves.begin(),
                                                   im.leaves.end());
                            combined.node_masks.insert(combined.node_masks.end(),
                                                       im.node_masks.begin(), im.node_masks.end());
                            next.push_back(std::move(combined));
                        }
                    }
                    partial = std::move(next);
                    if (partial.size() > kMaxMembersPerConnector)
                        throw ElaborationError("interaction set of " + node.path + " is too large");
                }
            }
            for (auto& p : partial) members.push_back(std::move(p));
            if (members.size() > kMaxMembersPerConnector)
                throw ElaborationError("interaction set of " + node.path + " is too large");
        }

        for (auto& m : members) {
            for (const auto& [atom, port] : m.leaves)
                m.labels.push_back(sys.atoms[atom].path + "." + sys.atoms[atom].def->ports[port].name);
            std::sort(m.labels.begin(), m.labels.end());
            // canonical leaf order follows the label order
            std::sort(m.leaves.begin(), m.leaves.end(),
                      [&](const auto& a, const auto& b) {
                          const std::string la =
                              sys.atoms[a.first].path + "." + sys.atoms[a.first].def->ports[a.second].name;
                          const std::string lb =
                              sys.atoms[b.first].path + "." + sys.atoms[b.first].def->ports[b.second].name;
                          return la < lb;
                      });
            std::sort(m.node_masks.begin(), m.node_masks.end());
        }
        std::sort(members.begin(), members.end(),
                  [](const System::MemberShape& a, const System::MemberShape& b) {
                      return a.labels < b.labels;
                  });
        sys.node_members[n] = std::move(members);
        return sys.node_members[n];
    }

    // ---- interaction programs -------------------------------------------------

    struct TreeTemps {
        std::vector<ValueType> types;
        std::map<std::uint32_t, std::uint32_t> node_base;  // node -> first tmp slot
    };

    void collect_tree_nodes(const System& sys, std::uint32_t n, std::vector<std::uint32_t>& out) {
        out.push_back(n);
        for (const auto& e : sys.nodes[n].ends)
            if (e.is_inner) collect_tree_nodes(sys, e.inner, out);
    }

    TreeTemps allocate_temps(System& sys, const std::vector<std::uint32_t>& tree) {
        TreeTemps t;
        for (std::uint32_t n : tree) {
            t.node_base[n] = std::uint32_t(t.types.size());
            sys.nodes[n].tmp_base = t.node_base[n];
            for (const auto& v : sys.nodes[n].def->vars) t.types.push_back(v.type);
        }
        return t;
    }

    /// Resolver for expressions inside connector `n`: bare names are the
    /// node's own variables (scratch slots), `first.var` resolves through the
    /// matching end to an atom variable or an inner connector variable.
    VarResolver node_resolver(const System& sys, std::uint32_t n, const TreeTemps& temps) const {
        const ConnNode& node = sys.nodes[n];
        return [&sys, &node, &temps](const std::string& path) -> std::optional<Slot> {
            auto segs = split_path(path);
            if (segs.size() == 1) {
                const auto& vars = node.def->vars;
                for (std::uint32_t i = 0; i < vars.size(); ++i)
                    if (vars[i].name == path)
                        return Slot{Slot::Kind::Tmp, node.tmp_base + i};
                return std::nullopt;
            }
            if (segs.size() != 2) return std::nullopt;
            for (const auto& e : node.ends) {
                if (e.def_first != segs[0]) continue;
                if (!e.is_inner) {
                    const AtomInstance& atom = sys.atoms[e.atom];
                    for (std::uint32_t i = 0; i < atom.def->vars.size(); ++i)
                        if (atom.def->vars[i].name == segs[1])
                            return Slot{Slot::Kind::Var, atom.var_base + i};
                    return std::nullopt;
                }
                const ConnNode& inner = sys.nodes[e.inner];
                auto base = temps.node_base.find(e.inner);
                if (base == temps.node_base.end()) return std::nullopt;
                for (std::uint32_t i = 0; i < inner.def->vars.size(); ++i)
                    if (inner.def->vars[i].name == segs[1])
                        return Slot{Slot::Kind::Tmp, base->second + i};
                return std::nullopt;
            }
            return std::nullopt;
        };
    }

    /// End indices of node `n` referenced by the assignment (target + reads).
    std::vector<std::size_t> referenced_ends(const ConnNode& node, const Assign& a) const {
        std::vector<std::string> paths;
        paths.push_back(a.target);
        collect_var_paths(a.value, paths);
        std::vector<std::size_t> ends;
        for (const auto& p : paths) {
            auto segs = split_path(p);
            if (segs.size() != 2) continue;
            for (std::size_t i = 0; i < node.ends.size(); ++i)
                if (node.ends[i].def_first == segs[0]) ends.push_back(i);
        }
        std::sort(ends.begin(), ends.end());
        ends.erase(std::unique(ends.begin(), ends.end()), ends.end());
        return ends;
    }

    std::vector<std::size_t> guard_ends(const ConnNode& node) const {
        std::vector<std::string> paths;
        collect_var_paths(node.def->guard, paths);
        std::vector<std::size_t> ends;
        for (const auto& p : paths) {
            auto segs = split_path(p);
            if (segs.size() != 2) continue;
            for (std::size_t i = 0; i < node.ends.size(); ++i)
                if (node.ends[i].def_first == segs[0]) ends.push_back(i);
        }
        std::sort(ends.begin(), ends.end());
        ends.erase(std::unique(ends.begin(), ends.end()), ends.end());
        return ends;
    }

    static bool all_in_mask(const std::vector<std::size_t>& ends, std::uint64_t mask) {
        for (std::size_t e : ends)
            if (!((mask >> e) & 1)) return false;
        return true;
    }

    /// Participating nodes ordered bottom-up (children before parents),
    /// following end order for determinism.
    void participating_post_order(const System& sys, std::uint32_t n,
                                  const std::map<std::uint32_t, std::uint64_t>& masks,
                                  std::vector<std::uint32_t>& out) const {
        auto it = masks.find(n);
        if (it == masks.end()) return;
        const ConnNode& node = sys.nodes[n];
        for (std::size_t i = 0; i < node.ends.size(); ++i)
            if (((it->second >> i) & 1) && node.ends[i].is_inner)
                participating_post_order(sys, node.ends[i].inner, masks, out);
        out.push_back(n);
    }

    void build_interactions(System& sys) {
        for (std::uint32_t n = 0; n < sys.nodes.size(); ++n)
            if (!sys.nodes[n].consumed) sys.generators.push_back(n);

        for (std::uint32_t g : sys.generators) {
            std::vector<std::uint32_t> tree;
            collect_tree_nodes(sys, g, tree);
            TreeTemps temps = allocate_temps(sys, tree);

            for (const auto& shape : sys.node_members[g]) {
                Interaction ix;
                ix.id = std::uint32_t(sys.interactions.size());
                ix.node = g;
                ix.leaves = shape.leaves;
                ix.port_labels = shape.labels;
                ix.node_masks = shape.node_masks;

                std::map<std::uint32_t, std::uint64_t> masks(shape.node_masks.begin(),
                                                             shape.node_masks.end());
                std::vector<std::uint32_t> order;
                participating_post_order(sys, g, masks, order);

                bool trivial = true;
                bool blocked = false;
                bool const_true = true;
                bool has_div = false;
                ProgramBuilder up_guard(node_resolver(sys, g, temps));
                ProgramBuilder up_down(node_resolver(sys, g, temps));
                int guards_emitted = 0;

                // upstream, bottom-up; each node's guard right after its up flow
                for (std::uint32_t n : order) {
                    const ConnNode& node = sys.nodes[n];
                    std::uint64_t mask = masks.at(n);
                    VarResolver res = node_resolver(sys, n, temps);
                    ProgramBuilder bu(res);
                    for (const auto& a : node.def->up) {
                        if (!all_in_mask(referenced_ends(node, a), mask)) continue;
                        bu.assign(a.target, *a.value);
                        trivial = false;
                        has_div |= action_references_div(a.value);
                    }
                    Program up = bu.take();
                    append(up_guard, up);
                    append(up_down, up);
                    if (node.def->guard) {
                        const_true &= is_const_true(node.def->guard);
                        if (!all_in_mask(guard_ends(node), mask)) {
                            blocked = true;
                        } else {
                            ProgramBuilder bg(res);
                            bg.expr(*node.def->guard);
                            append(up_guard, bg.take());
                            if (++guards_emitted > 1) up_guard.and_with_previous();
                            trivial = trivial && is_const_true(node.def->guard);
                        }
                    }
                }
                if (guards_emitted == 0) up_guard.guard(nullptr);

                // downstream, top-down (reverse of post-order visit)
                for (auto it = order.rbegin(); it != order.rend(); ++it) {
                    const ConnNode& node = sys.nodes[*it];
                    std::uint64_t mask = masks.at(*it);
                    VarResolver res = node_resolver(sys, *it, temps);
                    ProgramBuilder bd(res);
                    for (const auto& a : node.def->down) {
                        if (!all_in_mask(referenced_ends(node, a), mask)) continue;
                        bd.assign(a.target, *a.value);
                        trivial = false;
                    }
                    append(up_down, bd.take());
                }

                ix.up_guard = up_guard.take();
                ix.up_guard.temp_types = temps.types;
                ix.up_down = up_down.take();
                ix.up_down.temp_types = temps.types;
                ix.trivially_enabled = trivial && !blocked;
                ix.guard_blocked = blocked;
                ix.guard_const_true = const_true;
                ix.flows_have_div = has_div;
                sys.interactions.push_back(std::move(ix));
            }
        }
    }

    static void append(ProgramBuilder& dst, const Program& src) { dst.append_code(src); }

    // ---- priorities -------------------------------------------------------------

    /// Top-level participating end labels of the interaction, as written in
    /// the connector definition (used to match optional rule masks).
    static std::vector<std::string> top_end_paths(const System& sys, const Interaction& ix) {
        std::vector<std::string> out;
        const ConnNode& node = sys.nodes[ix.node];
        for (const auto& [n, mask] : ix.node_masks) {
            if (n != ix.node) continue;
            for (std::size_t i = 0; i < node.ends.size(); ++i)
                if ((mask >> i) & 1) out.push_back(node.def->ends[i].path);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    static bool mask_matches(const System& sys, const Interaction& ix,
                             const std::vector<std::string>& rule_ports) {
        if (rule_ports.empty()) return true;
        std::vector<std::string> want = rule_ports;
        std::sort(want.begin(), want.end());
        return top_end_paths(sys, ix) == want;
    }

    void build_priorities(System& sys) {
        std::size_t n = sys.interactions.size();
        std::vector<std::vector<std::uint32_t>> direct(n);
        for (const auto& rule : rules_) {
            for (const auto& lo : sys.interactions) {
                if (lo.node != rule.low_node || !mask_matches(sys, lo, rule.low_ports)) continue;
                for (const auto& hi : sys.interactions) {
                    if (hi.node != rule.high_node || !mask_matches(sys, hi, rule.high_ports))
                        continue;
                    direct[lo.id].push_back(hi.id);
                }
            }
        }
        // transitive closure (the rule graph is acyclic by validation)
        sys.dominators.assign(n, {});
        std::vector<int> state(n, 0);
        std::function<void(std::uint32_t)> dfs = [&](std::uint32_t i) {
            if (state[i]) return;
            state[i] = 1;
            std::set<std::uint32_t> acc;
            for (std::uint32_t j : direct[i]) {
                dfs(j);
                acc.insert(j);
                acc.insert(sys.dominators[j].begin(), sys.dominators[j].end());
            }
            sys.dominators[i].assign(acc.begin(), acc.end());
        };
        for (std::uint32_t i = 0; i < n; ++i) dfs(i);
    }
};

}  // namespace detail

/// Elaborates a validated model into an executable system. `root` defaults to
/// the model's root compound; a model without compounds yields an empty system.
inline System elaborate(const Model& m, const CompoundDef* root) {
    detail::Elaborator e(m, root);
    return e.run();
}
inline System elaborate(const Model& m) { return elaborate(m, m.root()); }

}  // namespace bip
