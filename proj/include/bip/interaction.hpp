// Copyright (c) bipkit contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bip/system.hpp"

namespace bip {

using WarnFn = std::function<void(const std::string&)>;

namespace detail {

/// Guard and up-flow programs never store to variable slots (up flows target
/// connector scratch variables), so evaluating them against a configuration
/// in place is read-only on `vars`.
inline VmContext ro_context(const Config& cfg) {
    return VmContext{
        std::span<Value>(const_cast<Value*>(cfg.vars.data()), cfg.vars.size()),
        std::span<const std::uint32_t>(cfg.state.data(), cfg.state.size())};
}

inline VmContext rw_context(Config& cfg) {
    return VmContext{std::span<Value>(cfg.vars.data(), cfg.vars.size()),
                     std::span<const std::uint32_t>(cfg.state.data(), cfg.state.size())};
}

inline bool port_enabled(const System& sys, const Config& cfg, std::uint32_t atom,
                         std::uint32_t port, const WarnFn& warn) {
    const AtomInstance& a = sys.atoms[atom];
    for (std::uint32_t ti : a.by_port_state[port][cfg.state[atom]]) {
        const auto& t = a.transitions[ti];
        if (t.guard_const_true) return true;
        try {
            if (run_program_bool(t.guard, ro_context(cfg))) return true;
        } catch (const EvalError& e) {
            if (warn)
                warn("guard of transition on " + a.path + "." + a.def->ports[port].name +
                     " raised " + e.what() + "; treated as disabled");
        }
    }
    return false;
}

}  // namespace detail

/// Interactions enabled at `cfg`: every member port has an enabled transition
/// from the current state and the connector guards hold on the up-flow values.
/// Pure: never mutates the configuration. Members whose guard or up flow
/// raises (division by zero) are reported to `warn` and excluded (fail-safe).
inline std::vector<std::uint32_t> enabled_interactions(const System& sys, const Config& cfg,
                                                       const WarnFn& warn = {}) {
    std::vector<std::uint32_t> out;
    // per (atom, port) memo: -1 unknown, 0 disabled, 1 enabled
    std::vector<std::vector<std::int8_t>> memo(sys.atoms.size());
    for (const Interaction& ix : sys.interactions) {
        bool ports_ok = true;
        for (const auto& [atom, port] : ix.leaves) {
            auto& m = memo[atom];
            if (m.empty()) m.assign(sys.atoms[atom].def->ports.size(), -1);
            if (m[port] < 0) m[port] = detail::port_enabled(sys, cfg, atom, port, warn) ? 1 : 0;
            if (!m[port]) {
                ports_ok = false;
                break;
            }
        }
        if (!ports_ok) continue;
        if (ix.guard_blocked) {
            if (warn)
                warn("interaction of " + sys.nodes[ix.node].path +
                     " cannot evaluate its guard (references a non-participating end); disabled");
            continue;
        }
        if (ix.trivially_enabled) {
            out.push_back(ix.id);
            continue;
        }
        try {
            if (run_program_bool(ix.up_guard, detail::ro_context(cfg))) out.push_back(ix.id);
        } catch (const EvalError& e) {
            if (warn)
                warn("up flow / guard of " + sys.nodes[ix.node].path + " raised " + e.what() +
                     "; interaction disabled");
        }
    }
    return out;
}

/// Filters an enabled set to its maximal elements under the priority order.
/// Dominance counts enabled dominators only; a nonempty set stays nonempty.
inline std::vector<std::uint32_t> maximal_of(const System& sys,
                                             const std::vector<std::uint32_t>& enabled) {
    std::vector<std::uint8_t> in(sys.interactions.size(), 0);
    for (std::uint32_t id : enabled) in[id] = 1;
    std::vector<std::uint32_t> out;
    for (std::uint32_t id : enabled) {
        bool dominated = false;
        for (std::uint32_t d : sys.dominators[id])
            if (in[d]) {
                dominated = true;
                break;
            }
        if (!dominated) out.push_back(id);
    }
    return out;
}

inline std::vector<std::uint32_t> maximal_enabled(const System& sys, const Config& cfg,
                                                  const WarnFn& warn = {}) {
    return maximal_of(sys, enabled_interactions(sys, cfg, warn));
}

struct FireError {
    enum class Kind { None, DivisionByZero, NoEnabledTransition } kind = Kind::None;
    std::string detail;
};

struct ChosenTransition {
    std::uint32_t atom = 0;
    std::uint32_t transition = 0;  // index into AtomInstance::transitions
};

/// Executes one interaction transactionally: up flows bottom-up, down flows
/// top-down (writing exported variables of participating ports into the atoms
/// before their transitions run), then exactly one enabled transition per
/// participating atom, guard re-checked on post-down values, declaration
/// order breaking ties. Returns the successor configuration, or nullopt with
/// the original configuration untouched.
inline std::optional<Config> fire(const System& sys, const Config& cfg, std::uint32_t id,
                                  FireError* err = nullptr,
                                  std::vector<ChosenTransition>* chosen = nullptr) {
    const Interaction& ix = sys.interactions[id];
    Config next = cfg;
    try {
        run_program(ix.up_down, detail::rw_context(next));
        for (const auto& [atom, port] : ix.leaves) {
            AtomInstance const& a = sys.atoms[atom];
            const auto& candidates = a.by_port_state[port][next.state[atom]];
            std::int64_t picked = -1;
            for (std::uint32_t ti : candidates) {
                const auto& t = a.transitions[ti];
                if (t.guard_const_true || run_program_bool(t.guard, detail::rw_context(next))) {
                    picked = ti;
                    break;
                }
            }
            if (picked < 0) {
                if (err)
                    *err = {FireError::Kind::NoEnabledTransition,
                            "no enabled transition on " + a.path + "." + a.def->ports[port].name +
                                " after down flow"};
                return std::nullopt;
            }
            const auto& t = a.transitions[std::size_t(picked)];
            run_program(t.action, detail::rw_context(next));
            next.state[atom] = t.target;
            if (chosen) chosen->push_back({atom, std::uint32_t(picked)});
        }
    } catch (const EvalError& e) {
        if (err) *err = {FireError::Kind::DivisionByZero, e.what()};
        return std::nullopt;
    }
    return next;
}

/// Diagnostic view of an enabled interaction: snapshots of the exported
/// variables provided by the participating ports, and the connector variable
/// valuation after the up flow.
struct BoundInteraction {
    std::uint32_t id = 0;
    std::vector<std::pair<std::string, Value>> snapshot;
    std::vector<std::pair<std::string, Value>> connector_vars;
};

inline BoundInteraction bind_interaction(const System& sys, const Config& cfg, std::uint32_t id) {
    const Interaction& ix = sys.interactions[id];
    BoundInteraction b;
    b.id = id;
    for (const auto& [atom, port] : ix.leaves) {
        const AtomInstance& a = sys.atoms[atom];
        for (const auto& vn : a.def->ports[port].exported_vars) {
            for (std::uint32_t i = 0; i < a.def->vars.size(); ++i)
                if (a.def->vars[i].name == vn)
                    b.snapshot.emplace_back(a.path + "." + vn, cfg.vars[a.var_base + i]);
        }
    }
    std::vector<Value> temps;
    try {
        run_program(ix.up_guard, detail::ro_context(cfg), &temps);
    } catch (const EvalError&) {
        temps.clear();
    }
    for (const auto& [node_idx, mask] : ix.node_masks) {
        (void)mask;
        const ConnNode& node = sys.nodes[node_idx];
        for (std::uint32_t i = 0; i < node.def->vars.size(); ++i) {
            std::uint32_t slot = node.tmp_base + i;
            if (slot < temps.size())
                b.connector_vars.emplace_back(node.path + "." + node.def->vars[i].name, temps[slot]);
        }
    }
    return b;
}

}  // namespace bip
