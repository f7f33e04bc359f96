// Copyright (c) bipkit contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bip/model.hpp"
#include "bip/printer.hpp"
#include "bip/validate.hpp"
#include "bip/verify.hpp"

namespace bip {

class ApplyError : public std::runtime_error {
public:
    enum class Kind {
        ArityMismatch,
        InterfaceMismatch,
        ParameterInterfaceConflict,
        UnknownOperand,
        Conflict,
    };
    ApplyError(Kind kind, std::string what, std::string param = {},
               std::vector<std::string> missing = {})
        : std::runtime_error(std::move(what)),
          kind(kind),
          param(std::move(param)),
          missing(std::move(missing)) {}

    Kind kind;
    std::string param;
    std::vector<std::string> missing;
};

namespace detail {

inline std::vector<std::string> sorted(std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    return v;
}

inline void check_param_compatibility(const std::vector<ArchPart>& parts) {
    std::map<std::string, std::vector<std::string>> interfaces;
    for (const auto& part : parts) {
        for (const auto& p : part.params) {
            auto iface = sorted(p.interface_ports);
            auto [it, inserted] = interfaces.emplace(p.name, iface);
            if (!inserted && it->second != iface)
                throw ApplyError(ApplyError::Kind::ParameterInterfaceConflict,
                                 "parameter '" + p.name +
                                     "' is declared with different interfaces by the composed "
                                     "architectures",
                                 p.name);
        }
    }
}

}  // namespace detail

/// Architecture composition. Symbolically a union of the constituent parts
/// keyed by source architecture, which makes the operator associative,
/// commutative and idempotent by construction; the conjunction semantics on
/// the glue is realized when the composed architecture is applied.
inline ArchitectureDef compose(const ArchitectureDef& a, const ArchitectureDef& b) {
    ArchitectureDef out;
    std::map<std::string, const ArchPart*> by_source;
    for (const auto& p : a.parts) by_source.emplace(p.source, &p);
    for (const auto& p : b.parts) {
        auto [it, inserted] = by_source.emplace(p.source, &p);
        if (!inserted && !(*it->second == p))
            throw ApplyError(ApplyError::Kind::Conflict,
                             "two different architectures share the name '" + p.source + "'");
    }
    for (const auto& [source, part] : by_source) out.parts.push_back(*part);
    detail::check_param_compatibility(out.parts);
    std::string name;
    for (const auto& [source, part] : by_source) {
        if (!name.empty()) name += '+';
        name += source;
    }
    out.name = name;
    return out;
}

/// Canonical form for structural comparison of composition results: parts
/// sorted by source, declarations sorted within each part.
inline ArchitectureDef canonical_architecture(const ArchitectureDef& a) {
    ArchitectureDef out = a;
    std::sort(out.parts.begin(), out.parts.end(),
              [](const ArchPart& x, const ArchPart& y) { return x.source < y.source; });
    for (auto& part : out.parts) {
        for (auto& p : part.params)
            std::sort(p.interface_ports.begin(), p.interface_ports.end());
        std::sort(part.params.begin(), part.params.end(),
                  [](const ArchParam& x, const ArchParam& y) { return x.name < y.name; });
        std::sort(part.coordinators.begin(), part.coordinators.end(),
                  [](const CoordinatorDecl& x, const CoordinatorDecl& y) { return x.name < y.name; });
        std::sort(part.connectors.begin(), part.connectors.end(),
                  [](const ConnectorDef& x, const ConnectorDef& y) { return x.name < y.name; });
        std::sort(part.priorities.begin(), part.priorities.end(),
                  [](const PriorityRule& x, const PriorityRule& y) {
                      return std::tie(x.low, x.high) < std::tie(y.low, y.high);
                  });
        std::sort(part.properties.begin(), part.properties.end());
    }
    return out;
}

struct ApplicationResult {
    /// Self-contained model: operand and coordinator definitions (with their
    /// transitive dependencies), the characteristic property, and the
    /// composed compound as root.
    Model extended;
    std::string compound;  // name of the composed compound within `extended`
    std::string property;  // name of the characteristic property within `extended`
    std::vector<std::pair<std::string, std::string>> binding;  // parameter -> operand type
};

namespace detail {

struct PartGlue {
    const ArchPart* part;
    std::set<std::string> param_ports;  // "Param.port" referenced by this part's glue
    struct Member {
        std::uint32_t connector;  // index into part->connectors
        std::uint64_t mask;
        std::set<std::string> params;  // participating param-port labels
    };
    std::vector<Member> members;
};

inline std::vector<PartGlue> build_part_glue(const std::vector<ArchPart>& parts) {
    std::vector<PartGlue> out;
    for (const auto& part : parts) {
        PartGlue g;
        g.part = &part;
        std::set<std::string> param_names;
        for (const auto& p : part.params) param_names.insert(p.name);
        for (std::uint32_t c = 0; c < part.connectors.size(); ++c) {
            const ConnectorDef& conn = part.connectors[c];
            std::size_t n = conn.ends.size();
            if (n == 0 || n > 16)
                throw ApplyError(ApplyError::Kind::Conflict,
                                 "architecture connector '" + conn.name + "' has unsupported arity");
            bool any_trigger = false;
            for (const auto& e : conn.ends) any_trigger |= e.trigger;
            std::vector<std::uint64_t> masks;
            if (!any_trigger) {
                masks.push_back((1ull << n) - 1);
            } else {
                for (std::uint64_t m = 1; m < (1ull << n); ++m) {
                    bool t = false;
                    for (std::size_t i = 0; i < n; ++i)
                        if (((m >> i) & 1) && conn.ends[i].trigger) t = true;
                    if (t) masks.push_back(m);
                }
            }
            for (std::uint64_t m : masks) {
                PartGlue::Member member{c, m, {}};
                for (std::size_t i = 0; i < n; ++i) {
                    if (!((m >> i) & 1)) continue;
                    auto segs = split_path(conn.ends[i].path);
                    if (segs.size() == 2 && param_names.count(segs[0])) {
                        member.params.insert(conn.ends[i].path);
                        g.param_ports.insert(conn.ends[i].path);
                    }
                }
                g.members.push_back(std::move(member));
            }
        }
        out.push_back(std::move(g));
    }
    return out;
}

inline ExprPtr rename_components(const ExprPtr& e, const std::map<std::string, std::string>& ren) {
    if (!e) return e;
    switch (e->kind) {
        case Expr::Kind::Constant: return e;
        case Expr::Kind::VarRead: {
            auto segs = split_path(e->path);
            auto it = ren.find(segs[0]);
            if (it == ren.end()) return e;
            segs[0] = it->second;
            std::string joined = segs[0];
            for (std::size_t i = 1; i < segs.size(); ++i) joined += "." + segs[i];
            return Expr::make_var(joined, e->span);
        }
        case Expr::Kind::StateTest: {
            auto it = ren.find(e->path);
            if (it == ren.end()) return e;
            return Expr::make_state_test(it->second, e->state, e->span);
        }
        case Expr::Kind::Unary:
            return Expr::make_unary(e->un, rename_components(e->lhs, ren), e->span);
        case Expr::Kind::Binary:
            return Expr::make_binary(e->bin, rename_components(e->lhs, ren),
                                     rename_components(e->rhs, ren), e->span);
    }
    return e;
}

/// Renames both component prefixes and bare connector-variable names.
inline ExprPtr rename_vars(const ExprPtr& e, const std::map<std::string, std::string>& comp_ren,
                           const std::map<std::string, std::string>& var_ren) {
    if (!e) return e;
    switch (e->kind) {
        case Expr::Kind::Constant: return e;
        case Expr::Kind::VarRead: {
            auto segs = split_path(e->path);
            if (segs.size() == 1) {
                auto it = var_ren.find(e->path);
                return it == var_ren.end() ? e : Expr::make_var(it->second, e->span);
            }
            auto it = comp_ren.find(segs[0]);
            if (it == comp_ren.end()) return e;
            std::string joined = it->second;
            for (std::size_t i = 1; i < segs.size(); ++i) joined += "." + segs[i];
            return Expr::make_var(joined, e->span);
        }
        case Expr::Kind::StateTest: return rename_components(e, comp_ren);
        case Expr::Kind::Unary:
            return Expr::make_unary(e->un, rename_vars(e->lhs, comp_ren, var_ren), e->span);
        case Expr::Kind::Binary:
            return Expr::make_binary(e->bin, rename_vars(e->lhs, comp_ren, var_ren),
                                     rename_vars(e->rhs, comp_ren, var_ren), e->span);
    }
    return e;
}

}  // namespace detail

/// Applies an architecture: instantiates the operands under the parameter
/// names, adds fresh coordinator instances, and materializes the glue. For a
/// composed architecture an interaction must project onto a member (or
/// nothing) of every constituent part over its referenced parameter ports, so
/// connectors sharing parameter ports fuse into joint rendezvous connectors.
inline ApplicationResult apply_architecture(const Model& model, const ArchitectureDef& arch,
                                            const std::vector<std::string>& operand_types) {
    std::vector<ArchPart> parts = arch.parts;
    std::sort(parts.begin(), parts.end(),
              [](const ArchPart& a, const ArchPart& b) { return a.source < b.source; });
    detail::check_param_compatibility(parts);

    // named union of parameters, first-appearance order across sorted parts
    std::vector<ArchParam> params;
    for (const auto& part : parts)
        for (const auto& p : part.params) {
            bool seen = false;
            for (const auto& q : params) seen |= q.name == p.name;
            if (!seen) params.push_back(p);
        }

    if (operand_types.size() != params.size())
        throw ApplyError(ApplyError::Kind::ArityMismatch,
                         "architecture '" + arch.name + "' expects " +
                             std::to_string(params.size()) + " operand(s), got " +
                             std::to_string(operand_types.size()));

    ApplicationResult result;

    CompoundDef compound;
    {
        std::string base;
        for (const auto& part : parts) {
            if (!base.empty()) base += '_';
            base += part.source;
        }
        compound.name = base + "_applied";
    }

    // bind operands, interface-level refinement check (port-name superset)
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::string& op_name = operand_types[i];
        std::vector<std::string> have;
        if (const AtomDef* atom = model.find_atom(op_name)) {
            for (const auto& p : atom->ports) have.push_back(p.name);
        } else if (const CompoundDef* comp = model.find_compound(op_name)) {
            have = comp->exports;
        } else {
            throw ApplyError(ApplyError::Kind::UnknownOperand,
                             "operand type '" + op_name + "' is not defined");
        }
        std::vector<std::string> missing;
        for (const auto& port : params[i].interface_ports)
            if (std::find(have.begin(), have.end(), port) == have.end()) missing.push_back(port);
        if (!missing.empty()) {
            std::string msg = "operand '" + op_name + "' does not provide port(s)";
            for (const auto& m : missing) msg += " " + m;
            msg += " required by parameter '" + params[i].name + "'";
            throw ApplyError(ApplyError::Kind::InterfaceMismatch, msg, params[i].name, missing);
        }
        compound.components.push_back({params[i].name, op_name, {}});
        result.binding.emplace_back(params[i].name, op_name);
    }

    // coordinator instances; names qualified with the source on collision
    std::map<std::string, int> coord_name_count;
    for (const auto& part : parts)
        for (const auto& c : part.coordinators) coord_name_count[c.name]++;
    std::vector<std::map<std::string, std::string>> coord_rename(parts.size());
    for (std::size_t pi = 0; pi < parts.size(); ++pi) {
        for (const auto& c : parts[pi].coordinators) {
            std::string inst = coord_name_count[c.name] > 1 ? c.name + "_" + parts[pi].source : c.name;
            coord_rename[pi][c.name] = inst;
            compound.components.push_back({inst, c.type, {}});
        }
    }

    // glue fusion over part member tuples
    std::vector<detail::PartGlue> glue = detail::build_part_glue(parts);
    struct Choice {
        int member = -1;  // index into glue[p].members, -1 = not participating
    };
    std::vector<Choice> choice(parts.size());
    std::set<std::string> used_names;

    std::uint64_t tuples = 1;
    for (const auto& g : glue) {
        tuples *= g.members.size() + 1;
        if (tuples > 65536)
            throw ApplyError(ApplyError::Kind::Conflict,
                             "composed glue of '" + arch.name + "' is too large to materialize");
    }

    std::function<void(std::size_t)> enumerate = [&](std::size_t p) {
        if (p < parts.size()) {
            choice[p].member = -1;
            enumerate(p + 1);
            for (int m = 0; m < int(glue[p].members.size()); ++m) {
                choice[p].member = m;
                enumerate(p + 1);
            }
            choice[p].member = -1;
            return;
        }
        // consistency: the union's parameter ports must project exactly onto
        // each part's chosen member (or miss the part entirely)
        std::set<std::string> all_params;
        bool any = false;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (choice[i].member < 0) continue;
            any = true;
            const auto& m = glue[i].members[std::size_t(choice[i].member)];
            all_params.insert(m.params.begin(), m.params.end());
        }
        if (!any) return;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            std::set<std::string> proj;
            for (const auto& port : glue[i].param_ports)
                if (all_params.count(port)) proj.insert(port);
            if (choice[i].member < 0) {
                if (!proj.empty()) return;
            } else if (proj != glue[i].members[std::size_t(choice[i].member)].params) {
                return;
            }
        }

        // materialize the fused connector
        ConnectorDef fused;
        std::vector<std::string> contributor_names;
        std::vector<std::pair<std::size_t, const detail::PartGlue::Member*>> contributors;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (choice[i].member < 0) continue;
            const auto& m = glue[i].members[std::size_t(choice[i].member)];
            contributors.emplace_back(i, &m);
            contributor_names.push_back(parts[i].connectors[m.connector].name);
        }
        {
            std::string base;
            for (std::size_t i = 0; i < contributor_names.size(); ++i) {
                if (i) base += '_';
                base += contributor_names[i];
            }
            std::string name = base;
            int n = 1;
            while (!used_names.insert(name).second) name = base + "_" + std::to_string(++n);
            fused.name = name;
        }

        std::set<std::string> end_paths;
        for (const auto& [pi, m] : contributors) {
            const ConnectorDef& conn = parts[pi].connectors[m->connector];
            const bool multi = contributors.size() > 1;
            // connector-variable renaming keeps fused scopes disjoint
            std::map<std::string, std::string> var_ren;
            std::string var_prefix = multi ? conn.name + "_" : "";
            for (const auto& v : conn.vars) {
                var_ren[v.name] = var_prefix + v.name;
                fused.vars.push_back({var_prefix + v.name, v.type, {}});
            }
            for (std::size_t e = 0; e < conn.ends.size(); ++e) {
                if (!((m->mask >> e) & 1)) continue;
                auto segs = split_path(conn.ends[e].path);
                std::string path = conn.ends[e].path;
                auto rn = coord_rename[pi].find(segs[0]);
                if (rn != coord_rename[pi].end()) path = rn->second + "." + segs[1];
                if (end_paths.insert(path).second) fused.ends.push_back({path, false, {}});
            }
            std::map<std::string, std::string> comp_ren = coord_rename[pi];
            auto in_member = [&](const Assign& a) {
                std::vector<std::string> paths{a.target};
                detail::collect_var_paths(a.value, paths);
                for (const auto& vp : paths) {
                    auto s = split_path(vp);
                    if (s.size() != 2) continue;
                    for (std::size_t e = 0; e < conn.ends.size(); ++e) {
                        auto es = split_path(conn.ends[e].path);
                        if (es[0] == s[0] && !((m->mask >> e) & 1)) return false;
                    }
                }
                return true;
            };
            auto rename_assign = [&](const Assign& a) {
                Assign out;
                auto segs2 = split_path(a.target);
                if (segs2.size() == 1) {
                    out.target = var_ren.count(a.target) ? var_ren[a.target] : a.target;
                } else {
                    auto rn2 = comp_ren.find(segs2[0]);
                    out.target = rn2 == comp_ren.end() ? a.target : rn2->second + "." + segs2[1];
                }
                out.value = detail::rename_vars(a.value, comp_ren, var_ren);
                return out;
            };
            for (const auto& a : conn.up)
                if (in_member(a)) fused.up.push_back(rename_assign(a));
            for (const auto& a : conn.down)
                if (in_member(a)) fused.down.push_back(rename_assign(a));
            if (conn.guard) {
                ExprPtr g = detail::rename_vars(conn.guard, comp_ren, var_ren);
                fused.guard = fused.guard ? Expr::make_binary(BinaryOp::And, fused.guard, g) : g;
            }
        }
        compound.connectors.push_back(std::move(fused));
    };
    enumerate(0);

    // priorities lift to every fused connector containing the named one
    for (std::size_t pi = 0; pi < parts.size(); ++pi) {
        for (const auto& rule : parts[pi].priorities) {
            std::vector<std::string> lows, highs;
            for (const auto& conn : compound.connectors) {
                // contributor names are recorded in the fused name parts
                // (exact-name match or name-with-separator match)
                auto contains = [&](const std::string& piece) {
                    if (conn.name == piece) return true;
                    auto pos = conn.name.find(piece);
                    while (pos != std::string::npos) {
                        bool left_ok = pos == 0 || conn.name[pos - 1] == '_';
                        std::size_t endp = pos + piece.size();
                        bool right_ok = endp == conn.name.size() || conn.name[endp] == '_';
                        if (left_ok && right_ok) return true;
                        pos = conn.name.find(piece, pos + 1);
                    }
                    return false;
                };
                if (contains(rule.low)) lows.push_back(conn.name);
                if (contains(rule.high)) highs.push_back(conn.name);
            }
            for (const auto& lo : lows)
                for (const auto& hi : highs)
                    if (lo != hi) compound.priorities.push_back({lo, hi, {}, {}, {}});
        }
    }

    // characteristic property: conjunction over the parts' properties with
    // coordinator instances renamed
    std::vector<std::pair<std::string, ExprPtr>> conjuncts;
    for (std::size_t pi = 0; pi < parts.size(); ++pi) {
        std::map<std::string, std::string> comp_ren = coord_rename[pi];
        for (const auto& pname : parts[pi].properties) {
            const PropertyDef* def = model.find_property(pname);
            if (!def)
                throw ApplyError(ApplyError::Kind::Conflict,
                                 "architecture references undefined property '" + pname + "'");
            ExprPtr pred = detail::rename_components(def->predicate, comp_ren);
            bool dup = false;
            for (const auto& [n, e] : conjuncts) dup |= n == pname && expr_equal(e, pred);
            if (!dup) conjuncts.emplace_back(pname, pred);
        }
    }
    if (conjuncts.empty())
        throw ApplyError(ApplyError::Kind::Conflict,
                         "architecture '" + arch.name + "' has no characteristic property");
    PropertyDef prop;
    for (const auto& [n, e] : conjuncts) {
        if (!prop.name.empty()) prop.name += "_and_";
        prop.name += n;
        prop.predicate = prop.predicate ? Expr::make_binary(BinaryOp::And, prop.predicate, e) : e;
    }

    // assemble the self-contained output model: the definitions the composed
    // compound depends on, in the source model's order
    std::set<std::string> needed;
    std::function<void(const std::string&)> add_type = [&](const std::string& t) {
        if (!needed.insert(t).second) return;
        if (const CompoundDef* c = model.find_compound(t))
            for (const auto& inst : c->components) add_type(inst.type);
    };
    for (const auto& inst : compound.components) add_type(inst.type);
    for (const auto& a : model.atoms)
        if (needed.count(a.name)) result.extended.atoms.push_back(a);
    for (const auto& c : model.compounds)
        if (needed.count(c.name)) result.extended.compounds.push_back(c);

    result.property = prop.name;
    result.extended.properties.push_back(std::move(prop));

    result.compound = compound.name;
    while (result.extended.find_atom(result.compound) ||
           result.extended.find_compound(result.compound)) {
        result.compound += "_x";
    }
    compound.name = result.compound;
    result.extended.compounds.push_back(std::move(compound));
    return result;
}

struct CertifyResult {
    Verdict safety;
    Verdict deadlock;
};

/// Applies the architecture, then verifies the characteristic property and
/// deadlock-freedom on the exact state space of the composed model. Property
/// enforcement is by construction; deadlock-freedom always needs a check.
inline CertifyResult certify(const Model& model, const ArchitectureDef& arch,
                             const std::vector<std::string>& operand_types,
                             const ExploreLimits& limits = {}) {
    ApplicationResult app = apply_architecture(model, arch, operand_types);
    auto diags = validate_model(app.extended);
    if (has_errors(diags)) {
        std::string msg = "composed model is ill-formed:";
        for (const auto& d : diags)
            if (d.severity == Severity::Error) msg += "\n  " + d.format();
        throw ApplyError(ApplyError::Kind::Conflict, msg);
    }
    System sys = elaborate(app.extended, app.extended.find_compound(app.compound));
    StateSpace space = explore(sys, limits);
    CertifyResult out;
    out.safety = check_safety(sys, space, *app.extended.find_property(app.property));
    out.deadlock = check_deadlock(sys, space);
    return out;
}

}  // namespace bip
