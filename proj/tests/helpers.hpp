// Copyright (c) bipkit contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bip/model.hpp"
#include "bip/parser.hpp"
#include "bip/rng.hpp"
#include "bip/validate.hpp"

namespace testutil {

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string model_path(const std::string& name) {
    return std::string(BIP_MODELS_DIR) + "/" + name;
}

/// Parses and validates a bundled model; throws on any diagnostic error.
inline bip::Model load_bundled(const std::string& name) {
    auto pr = bip::parse(slurp(model_path(name)), name);
    auto diags = pr.diagnostics;
    auto vd = bip::validate_model(pr.model);
    diags.insert(diags.end(), vd.begin(), vd.end());
    if (bip::has_errors(diags)) {
        std::string msg = "bundled model " + name + " is ill-formed:";
        for (const auto& d : diags) msg += "\n  " + d.format();
        throw std::runtime_error(msg);
    }
    return std::move(pr.model);
}

// ---------------------------------------------------------------------------
// Independent oracles (implementation-free transcriptions of the bundled
// models; they share no code with the library's semantics)
// ---------------------------------------------------------------------------

/// Brute-force enumeration of the two-task mutual-exclusion model:
/// tasks 0=sleep/1=work, coordinator 0=free/1=taken; begin ports synchronize
/// with take, finish ports with release.
struct MutexOracleResult {
    std::set<std::array<int, 3>> reachable;  // (task1, task2, coord)
    int edges = 0;
    bool both_at_work_reachable = false;
    bool deadlock_reachable = false;
};

inline MutexOracleResult mutex_brute_force(bool with_release2 = true) {
    MutexOracleResult out;
    std::deque<std::array<int, 3>> frontier{{0, 0, 0}};
    out.reachable.insert({0, 0, 0});
    while (!frontier.empty()) {
        auto [t1, t2, c] = frontier.front();
        frontier.pop_front();
        std::vector<std::array<int, 3>> succ;
        if (t1 == 0 && c == 0) succ.push_back({1, t2, 1});                    // b1 . t
        if (t2 == 0 && c == 0) succ.push_back({t1, 1, 1});                    // b2 . t
        if (t1 == 1 && c == 1) succ.push_back({0, t2, 0});                    // f1 . r
        if (with_release2 && t2 == 1 && c == 1) succ.push_back({t1, 0, 0});   // f2 . r
        if (succ.empty()) out.deadlock_reachable = true;
        out.edges += int(succ.size());
        for (auto s : succ) {
            if (s[0] == 1 && s[1] == 1) out.both_at_work_reachable = true;
            if (out.reachable.insert(s).second) frontier.push_back(s);
        }
    }
    return out;
}

/// Closed-form state count of the bundled traffic light (durations 60, 4, 56):
/// each phase of duration d contributes the configurations t = 0..d, and the
/// remaining variables are functions of the phase.
inline int traffic_light_state_count() {
    int total = 0;
    for (int d : {60, 4, 56}) total += d + 1;
    return total;
}

/// Independent simulation of the traffic light under the tick < sync
/// priority. Returns the sequence of phase durations observed over `cycles`
/// switches, to cross-check the engine's schedule.
inline std::vector<int> traffic_light_schedule(int cycles) {
    int durations[3] = {60, 4, 56};  // green, yellow, red
    std::vector<int> observed;
    int phase = 0, t = 0, n = 60;
    while (int(observed.size()) < cycles) {
        if (t >= n) {
            observed.push_back(t);
            phase = (phase + 1) % 3;
            n = durations[phase];
            t = 0;
        } else {
            ++t;
        }
    }
    return observed;
}

/// Flat connector interaction-set size: 1 for a rendezvous, else
/// (2^k - 1) * 2^s for k triggers and s synchrons.
inline std::size_t flat_interaction_count(std::size_t triggers, std::size_t synchrons) {
    if (triggers == 0) return 1;
    return ((std::size_t(1) << triggers) - 1) * (std::size_t(1) << synchrons);
}

// ---------------------------------------------------------------------------
// Random model generation
// ---------------------------------------------------------------------------

struct GenOptions {
    bool dataflow = false;    // connector variables, guards, up/down flows
    bool hierarchy = false;   // inner connectors through exports
    bool properties = false;  // top-level property definitions
    bool architectures = false;
    bool division_guards = false;  // guards that can raise division by zero
    int max_atoms = 5;
    int max_states = 4;
};

class ModelGen {
public:
    explicit ModelGen(std::uint64_t seed) : rng_(seed) {}

    bip::Model generate(const GenOptions& opt) {
        bip::Model m;
        int natoms = 1 + int(rng_.pick(std::uint64_t(opt.max_atoms)));
        for (int a = 0; a < natoms; ++a) m.atoms.push_back(gen_atom("A" + std::to_string(a), opt));

        bip::CompoundDef comp;
        comp.name = "Root";
        for (int a = 0; a < natoms; ++a)
            comp.components.push_back({"c" + std::to_string(a), m.atoms[std::size_t(a)].name, {}});

        int nconn = 1 + int(rng_.pick(6));
        for (int c = 0; c < nconn; ++c) {
            bip::ConnectorDef conn = gen_connector("k" + std::to_string(c), m, comp, opt);
            if (!conn.ends.empty()) comp.connectors.push_back(std::move(conn));
        }
        if (opt.hierarchy && comp.connectors.size() >= 1 && pct(40)) add_hierarchy(m, comp);

        // acyclic priorities: lower index < higher index only
        if (comp.connectors.size() >= 2) {
            int nrules = int(rng_.pick(3));
            for (int r = 0; r < nrules; ++r) {
                std::size_t i = rng_.pick(comp.connectors.size());
                std::size_t j = rng_.pick(comp.connectors.size());
                if (i == j) continue;
                if (i > j) std::swap(i, j);
                comp.priorities.push_back(
                    {comp.connectors[i].name, comp.connectors[j].name, {}, {}, {}});
            }
        }
        m.compounds.push_back(std::move(comp));

        if (opt.properties && pct(70)) m.properties.push_back(gen_property(m));
        if (opt.architectures && pct(50)) m.architectures.push_back(gen_architecture(m));
        return m;
    }

    bip::ArchitectureDef gen_architecture(bip::Model& m) {
        // a coordinator atom type dedicated to this architecture
        bip::AtomDef coord = gen_atom("Coord" + std::to_string(counter_++), {});
        m.atoms.push_back(coord);

        bip::ArchitectureDef arch;
        arch.name = "Arch" + std::to_string(counter_++);
        bip::ArchPart part;
        part.source = arch.name;
        int nparams = 1 + int(rng_.pick(2));
        for (int p = 0; p < nparams; ++p) {
            bip::ArchParam ap;
            ap.name = "P" + std::to_string(p);
            ap.interface_ports = {"q0", "q1"};
            part.params.push_back(std::move(ap));
        }
        part.coordinators.push_back({"cc", coord.name, {}});
        int nconn = 1 + int(rng_.pick(3));
        for (int c = 0; c < nconn; ++c) {
            bip::ConnectorDef conn;
            conn.name = "g" + std::to_string(c);
            std::string param = "P" + std::to_string(rng_.pick(std::uint64_t(nparams)));
            conn.ends.push_back({param + (pct(50) ? ".q0" : ".q1"), false, {}});
            if (!coord.ports.empty()) {
                const auto& port = coord.ports[rng_.pick(coord.ports.size())];
                conn.ends.push_back({"cc." + port.name, pct(20), {}});
            }
            part.connectors.push_back(std::move(conn));
        }
        bip::PropertyDef prop;
        prop.name = "phi" + std::to_string(counter_++);
        prop.predicate = bip::Expr::make_const(bip::Value(true));
        m.properties.push_back(prop);
        part.properties.push_back(prop.name);
        arch.parts.push_back(std::move(part));
        return arch;
    }

    std::uint64_t pick(std::uint64_t k) { return rng_.pick(k); }

private:
    bip::Xoshiro256StarStar rng_;
    int counter_ = 0;

    bool pct(int p) { return rng_.pick(100) < std::uint64_t(p); }

    bip::ExprPtr const_int(std::int64_t v) { return bip::Expr::make_const(bip::Value(v)); }

    bip::AtomDef gen_atom(const std::string& name, const GenOptions& opt) {
        bip::AtomDef atom;
        atom.name = name;
        int nstates = 1 + int(rng_.pick(std::uint64_t(std::max(1, opt.max_states))));
        for (int s = 0; s < nstates; ++s) atom.states.push_back("s" + std::to_string(s));
        int nports = 1 + int(rng_.pick(3));
        for (int p = 0; p < nports; ++p) atom.ports.push_back({"q" + std::to_string(p), {}, {}});
        int nvars = int(rng_.pick(3));
        for (int v = 0; v < nvars; ++v)
            atom.vars.push_back({"v" + std::to_string(v),
                                 pct(30) ? bip::ValueType::Bool : bip::ValueType::Int, {}});
        // ports may export variables (needed for connector dataflow)
        for (auto& port : atom.ports)
            for (const auto& v : atom.vars)
                if (pct(50)) port.exported_vars.push_back(v.name);

        bip::InitSpec init;
        init.target = atom.states[rng_.pick(atom.states.size())];
        for (const auto& v : atom.vars)
            if (v.type == bip::ValueType::Int && pct(50))
                init.action.push_back({v.name, const_int(std::int64_t(rng_.pick(4))), {}});
        atom.init = std::move(init);

        int ntrans = 1 + int(rng_.pick(6));
        for (int t = 0; t < ntrans; ++t) {
            bip::Transition tr;
            tr.port = atom.ports[rng_.pick(atom.ports.size())].name;
            tr.source = atom.states[rng_.pick(atom.states.size())];
            tr.target = atom.states[rng_.pick(atom.states.size())];
            if (!atom.vars.empty() && pct(30)) {
                const auto& v = atom.vars[rng_.pick(atom.vars.size())];
                if (v.type == bip::ValueType::Int) {
                    if (opt.division_guards && pct(25)) {
                        // may divide by zero at runtime: exercises error-disabling
                        tr.guard = bip::Expr::make_binary(
                            bip::BinaryOp::Ge,
                            bip::Expr::make_binary(bip::BinaryOp::Div, const_int(4),
                                                   bip::Expr::make_var(v.name)),
                            const_int(1));
                    } else {
                        tr.guard = bip::Expr::make_binary(
                            pct(50) ? bip::BinaryOp::Le : bip::BinaryOp::Ge,
                            bip::Expr::make_var(v.name), const_int(std::int64_t(rng_.pick(4))));
                    }
                } else {
                    tr.guard = pct(50) ? bip::Expr::make_var(v.name)
                                       : bip::Expr::make_unary(bip::UnaryOp::Not,
                                                               bip::Expr::make_var(v.name));
                }
            }
            if (!atom.vars.empty() && pct(50)) {
                const auto& v = atom.vars[rng_.pick(atom.vars.size())];
                if (v.type == bip::ValueType::Int) {
                    // bounded update keeps the reachable space finite
                    tr.action.push_back(
                        {v.name,
                         bip::Expr::make_binary(
                             bip::BinaryOp::Mod,
                             bip::Expr::make_binary(bip::BinaryOp::Add, bip::Expr::make_var(v.name),
                                                    const_int(1 + std::int64_t(rng_.pick(3)))),
                             const_int(2 + std::int64_t(rng_.pick(6)))),
                         {}});
                } else {
                    tr.action.push_back(
                        {v.name, bip::Expr::make_unary(bip::UnaryOp::Not, bip::Expr::make_var(v.name)),
                         {}});
                }
            }
            atom.transitions.push_back(std::move(tr));
        }
        return atom;
    }

    bip::ConnectorDef gen_connector(const std::string& name, const bip::Model& m,
                                    const bip::CompoundDef& comp, const GenOptions& opt) {
        bip::ConnectorDef conn;
        conn.name = name;
        std::size_t natoms = comp.components.size();
        int nends = 1 + int(rng_.pick(std::uint64_t(std::min<std::size_t>(3, natoms))));
        std::set<std::size_t> used;
        struct EndInfo {
            std::string inst;
            const bip::AtomDef* atom;
            const bip::PortDecl* port;
        };
        std::vector<EndInfo> infos;
        for (int e = 0; e < nends; ++e) {
            std::size_t a = rng_.pick(natoms);
            if (!used.insert(a).second) continue;  // one port per atom
            const auto& inst = comp.components[a];
            const bip::AtomDef* atom = m.find_atom(inst.type);
            const auto& port = atom->ports[rng_.pick(atom->ports.size())];
            conn.ends.push_back({inst.name + "." + port.name, pct(25), {}});
            infos.push_back({inst.name, atom, &port});
        }
        if (!opt.dataflow) return conn;

        if (pct(40)) conn.vars.push_back({"w", bip::ValueType::Int, {}});
        bool have_w = !conn.vars.empty();
        // upstream: pull an exported int variable into the connector variable
        if (have_w) {
            for (const auto& info : infos) {
                const bip::VarDecl* src = nullptr;
                for (const auto& vn : info.port->exported_vars) {
                    const bip::VarDecl* v = info.atom->find_var(vn);
                    if (v && v->type == bip::ValueType::Int) src = v;
                }
                if (src && pct(60)) {
                    conn.up.push_back(
                        {"w",
                         bip::Expr::make_binary(bip::BinaryOp::Add, bip::Expr::make_var("w"),
                                                bip::Expr::make_var(info.inst + "." + src->name)),
                         {}});
                }
            }
            if (!conn.up.empty() && pct(40))
                conn.guard = bip::Expr::make_binary(bip::BinaryOp::Ge, bip::Expr::make_var("w"),
                                                    const_int(0));
            // downstream: push the value back into an exported variable
            for (const auto& info : infos) {
                const bip::VarDecl* dst = nullptr;
                for (const auto& vn : info.port->exported_vars) {
                    const bip::VarDecl* v = info.atom->find_var(vn);
                    if (v && v->type == bip::ValueType::Int) dst = v;
                }
                if (dst && pct(30)) {
                    conn.down.push_back(
                        {info.inst + "." + dst->name,
                         bip::Expr::make_binary(bip::BinaryOp::Mod, bip::Expr::make_var("w"),
                                                const_int(5)),
                         {}});
                    break;
                }
            }
        }
        if (pct(25)) {
            conn.exported = bip::ExportSpec{"xp", {}, {}};
            if (have_w) conn.exported->vars.push_back("w");
        }
        return conn;
    }

    /// Wraps two existing connectors under a new parent through exports,
    /// when the leaf sets are disjoint.
    void add_hierarchy(bip::Model& m, bip::CompoundDef& comp) {
        (void)m;
        if (comp.connectors.size() < 2) return;
        std::size_t i = 0, j = 1;
        std::set<std::string> atoms_i, atoms_j;
        for (const auto& e : comp.connectors[i].ends)
            atoms_i.insert(bip::split_path(e.path)[0]);
        for (const auto& e : comp.connectors[j].ends)
            atoms_j.insert(bip::split_path(e.path)[0]);
        for (const auto& a : atoms_i)
            if (atoms_j.count(a)) return;
        if (!comp.connectors[i].exported) comp.connectors[i].exported = bip::ExportSpec{"xp", {}, {}};
        if (!comp.connectors[j].exported)
            comp.connectors[j].exported = bip::ExportSpec{"xq", {}, {}};
        bip::ConnectorDef parent;
        parent.name = "top";
        parent.ends.push_back(
            {comp.connectors[i].name + "." + comp.connectors[i].exported->port_name, pct(50), {}});
        parent.ends.push_back(
            {comp.connectors[j].name + "." + comp.connectors[j].exported->port_name, false, {}});
        comp.connectors.push_back(std::move(parent));
    }

    bip::PropertyDef gen_property(const bip::Model& m) {
        const bip::CompoundDef& comp = m.compounds.back();
        bip::PropertyDef prop;
        prop.name = "phi";
        const auto& inst = comp.components[rng_.pick(comp.components.size())];
        const bip::AtomDef* atom = m.find_atom(inst.type);
        prop.predicate = bip::Expr::make_unary(
            bip::UnaryOp::Not,
            bip::Expr::make_state_test(inst.name, atom->states[rng_.pick(atom->states.size())]));
        if (pct(50))
            prop.predicate = bip::Expr::make_binary(bip::BinaryOp::Or, prop.predicate,
                                                    bip::Expr::make_const(bip::Value(true)));
        return prop;
    }
};

}  // namespace testutil
