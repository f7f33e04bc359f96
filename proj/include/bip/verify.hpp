// Copyright (c) bipkit contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "bip/engine.hpp"
#include "bip/interaction.hpp"
#include "bip/system.hpp"

namespace bip {

struct ExploreLimits {
    std::uint64_t max_states = 1u << 20;
    double max_seconds = 0;  // 0 = unlimited
};

/// Explicit state space: BFS over the maximal-priority-enabled interactions,
/// i.e. exactly the moves the engine can make. States are deduplicated by
/// canonical encoding; edge order per state is the engine's choice order.
struct StateSpace {
    struct Edge {
        std::uint32_t interaction = 0;
        std::uint32_t target = 0;
    };
    std::vector<Config> states;  // [0] = initial
    std::vector<std::vector<Edge>> edges;
    std::vector<bool> error_out;  // an enabled interaction fails to fire here
    std::vector<bool> expanded;   // false only in truncated spaces
    std::vector<std::pair<std::int64_t, std::uint32_t>> parent;  // (pred state, interaction id)
    bool truncated = false;
    std::uint64_t states_explored = 0;
    double elapsed_seconds = 0;

    bool deadlock(std::uint32_t s) const {
        return expanded[s] && edges[s].empty() && !error_out[s];
    }
};

inline StateSpace explore(const System& sys, const ExploreLimits& limits = {}) {
    auto t0 = std::chrono::steady_clock::now();
    StateSpace space;
    Config init = initialize(sys);
    std::unordered_map<std::string, std::uint32_t> index;
    index.emplace(sys.encode(init), 0);
    space.states.push_back(std::move(init));
    space.edges.emplace_back();
    space.error_out.push_back(false);
    space.expanded.push_back(false);
    space.parent.emplace_back(-1, 0);

    std::uint64_t visits = 0;
    for (std::uint32_t s = 0; s < space.states.size(); ++s) {
        if ((++visits & 0xff) == 0 && limits.max_seconds > 0) {
            double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (dt > limits.max_seconds) {
                space.truncated = true;
                break;
            }
        }
        std::vector<std::uint32_t> maximal = maximal_enabled(sys, space.states[s]);
        bool complete = true;
        for (std::uint32_t id : maximal) {
            FireError err;
            std::optional<Config> next = fire(sys, space.states[s], id, &err);
            if (!next) {
                space.error_out[s] = true;
                continue;
            }
            std::string key = sys.encode(*next);
            auto [it, inserted] = index.emplace(std::move(key), std::uint32_t(space.states.size()));
            if (inserted) {
                if (space.states.size() >= limits.max_states) {
                    // successor dropped: the space is truncated and this
                    // state must not pass for fully expanded
                    space.truncated = true;
                    complete = false;
                    index.erase(it);
                    continue;
                }
                space.states.push_back(std::move(*next));
                space.edges.emplace_back();
                space.error_out.push_back(false);
                space.expanded.push_back(false);
                space.parent.emplace_back(std::int64_t(s), id);
            }
            space.edges[s].push_back({id, it->second});
        }
        space.expanded[s] = complete;
    }
    for (std::uint32_t s = 0; s < space.states.size(); ++s)
        if (!space.expanded[s] && !space.truncated) space.truncated = true;
    space.states_explored = space.states.size();
    space.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return space;
}

enum class VerdictStatus { Holds, Violated, PotentialViolation, ResourceLimit };

inline const char* to_string(VerdictStatus s) {
    switch (s) {
        case VerdictStatus::Holds: return "Holds";
        case VerdictStatus::Violated: return "Violated";
        case VerdictStatus::PotentialViolation: return "PotentialViolation";
        case VerdictStatus::ResourceLimit: return "ResourceLimit";
    }
    return "?";
}

struct Verdict {
    VerdictStatus status = VerdictStatus::Holds;
    std::vector<TraceEvent> trace;  // replayable counterexample for Violated
    std::uint64_t states_explored = 0;
    double elapsed_seconds = 0;
    std::uint64_t candidates = 0;  // compositional mode: surviving abstract candidates
    std::string message;
};

namespace detail {

/// Rebuilds the shortest trace to `target` by re-firing along the BFS parents.
inline std::vector<TraceEvent> trace_to(const System& sys, const StateSpace& space,
                                        std::uint32_t target) {
    std::vector<std::uint32_t> ids;
    for (std::int64_t s = target; space.parent[std::size_t(s)].first >= 0;
         s = space.parent[std::size_t(s)].first)
        ids.push_back(space.parent[std::size_t(s)].second);
    std::reverse(ids.begin(), ids.end());

    std::vector<TraceEvent> events;
    Config cfg = initialize(sys);
    std::uint64_t step = 0;
    for (std::uint32_t id : ids) {
        std::optional<Config> next = fire(sys, cfg, id);
        if (!next) break;  // cannot happen on an explored edge
        const Interaction& ix = sys.interactions[id];
        TraceEvent ev;
        ev.step = step++;
        ev.connector = sys.nodes[ix.node].path;
        ev.ports = ix.port_labels;
        ev.writes = diff_writes(sys, cfg, *next, ix);
        events.push_back(std::move(ev));
        cfg = std::move(*next);
    }
    return events;
}

}  // namespace detail

/// Deadlock-freedom on an explored space: Violated with a shortest trace to
/// a state with no move; definitive Holds needs a complete space.
inline Verdict check_deadlock(const System& sys, const StateSpace& space) {
    Verdict v;
    v.states_explored = space.states_explored;
    v.elapsed_seconds = space.elapsed_seconds;
    for (std::uint32_t s = 0; s < space.states.size(); ++s) {
        if (space.deadlock(s)) {
            v.status = VerdictStatus::Violated;
            v.trace = detail::trace_to(sys, space, s);
            v.message = "deadlock reachable in " + std::to_string(v.trace.size()) + " steps";
            return v;
        }
    }
    if (space.truncated) {
        v.status = VerdictStatus::ResourceLimit;
        v.message = "state space truncated before completion";
        return v;
    }
    v.status = VerdictStatus::Holds;
    v.message = "no reachable deadlock";
    return v;
}

namespace detail {

inline Program compile_property(const System& sys, const PropertyDef& prop) {
    VarResolver vars = [&sys](const std::string& path) -> std::optional<Slot> {
        for (std::uint32_t i = 0; i < sys.vars.size(); ++i)
            if (sys.vars[i].path == path) return Slot{Slot::Kind::Var, i};
        return std::nullopt;
    };
    StateResolver states =
        [&sys](const std::string& path,
               const std::string& state) -> std::optional<std::pair<std::uint32_t, std::uint32_t>> {
        for (std::uint32_t a = 0; a < sys.atoms.size(); ++a) {
            if (sys.atoms[a].path != path) continue;
            const auto& names = sys.atoms[a].def->states;
            for (std::uint32_t i = 0; i < names.size(); ++i)
                if (names[i] == state) return std::make_pair(a, i);
            return std::nullopt;
        }
        return std::nullopt;
    };
    ProgramBuilder b(vars, states);
    b.expr(*prop.predicate);
    return b.take();
}

}  // namespace detail

/// Safety property on an explored space: Violated with a shortest trace to a
/// state falsifying the predicate.
inline Verdict check_safety(const System& sys, const StateSpace& space, const PropertyDef& prop) {
    Verdict v;
    v.states_explored = space.states_explored;
    v.elapsed_seconds = space.elapsed_seconds;
    Program pred = detail::compile_property(sys, prop);
    for (std::uint32_t s = 0; s < space.states.size(); ++s) {
        bool holds;
        try {
            holds = run_program_bool(pred, detail::ro_context(space.states[s]));
        } catch (const EvalError& e) {
            holds = false;
            v.message = std::string("property evaluation raised ") + e.what();
        }
        if (!holds) {
            v.status = VerdictStatus::Violated;
            v.trace = detail::trace_to(sys, space, s);
            if (v.message.empty())
                v.message = "property '" + prop.name + "' violated in " +
                            std::to_string(v.trace.size()) + " steps";
            return v;
        }
    }
    if (space.truncated) {
        v.status = VerdictStatus::ResourceLimit;
        v.message = "state space truncated before completion";
        return v;
    }
    v.status = VerdictStatus::Holds;
    v.message = "property '" + prop.name + "' holds on all reachable states";
    return v;
}

// ---------------------------------------------------------------------------
// Compositional over-approximation
// ---------------------------------------------------------------------------

namespace detail {

// Exact rational arithmetic for the invariant nullspace. Any overflow aborts
// the invariant computation (the caller falls back to the weaker but still
// sound control-only abstraction).
struct FracOverflow {};

struct Frac {
    long long num = 0;
    long long den = 1;

    static long long igcd(long long a, long long b) {
        if (a < 0) a = -a;
        if (b < 0) b = -b;
        while (b) {
            long long t = a % b;
            a = b;
            b = t;
        }
        return a;
    }
    static long long check(__int128 v) {
        if (v > INT64_MAX / 2 || v < INT64_MIN / 2) throw FracOverflow{};
        return (long long)v;
    }
    static Frac make(__int128 n, __int128 d) {
        if (d == 0) throw FracOverflow{};
        if (d < 0) {
            n = -n;
            d = -d;
        }
        long long nn = check(n), dd = check(d);
        long long g = igcd(nn, dd);
        if (g > 1) {
            nn /= g;
            dd /= g;
        }
        return Frac{nn, dd};
    }
    bool zero() const { return num == 0; }
    Frac operator+(const Frac& o) const {
        return make((__int128)num * o.den + (__int128)o.num * den, (__int128)den * o.den);
    }
    Frac operator-(const Frac& o) const {
        return make((__int128)num * o.den - (__int128)o.num * den, (__int128)den * o.den);
    }
    Frac operator*(const Frac& o) const { return make((__int128)num * o.num, (__int128)den * o.den); }
    Frac operator/(const Frac& o) const { return make((__int128)num * o.den, (__int128)den * o.num); }
};

/// Kernel basis of the row space: all y with M y = 0, scaled to integers.
/// Rows are incidence vectors over places.
inline std::vector<std::vector<long long>> integer_kernel(std::vector<std::vector<Frac>> m,
                                                          std::size_t cols) {
    std::vector<std::size_t> pivot_col;
    std::size_t row = 0;
    for (std::size_t col = 0; col < cols && row < m.size(); ++col) {
        std::size_t sel = row;
        while (sel < m.size() && m[sel][col].zero()) ++sel;
        if (sel == m.size()) continue;
        std::swap(m[row], m[sel]);
        Frac p = m[row][col];
        for (std::size_t c = col; c < cols; ++c) m[row][c] = m[row][c] / p;
        for (std::size_t r = 0; r < m.size(); ++r) {
            if (r == row || m[r][col].zero()) continue;
            Frac f = m[r][col];
            for (std::size_t c = col; c < cols; ++c) m[r][c] = m[r][c] - f * m[row][c];
        }
        pivot_col.push_back(col);
        ++row;
    }
    std::vector<bool> is_pivot(cols, false);
    for (std::size_t c : pivot_col) is_pivot[c] = true;

    std::vector<std::vector<long long>> basis;
    for (std::size_t free = 0; free < cols; ++free) {
        if (is_pivot[free]) continue;
        std::vector<Frac> y(cols, Frac{0, 1});
        y[free] = Frac{1, 1};
        for (std::size_t r = 0; r < pivot_col.size(); ++r)
            y[pivot_col[r]] = Frac{0, 1} - m[r][free];
        __int128 lcm = 1;
        for (const auto& f : y) {
            long long g = Frac::igcd((long long)lcm, f.den);
            lcm = lcm / g * f.den;
            if (lcm > INT64_MAX / 4) throw FracOverflow{};
        }
        std::vector<long long> iy(cols);
        for (std::size_t c = 0; c < cols; ++c)
            iy[c] = Frac::check((__int128)y[c].num * ((long long)lcm / y[c].den));
        basis.push_back(std::move(iy));
    }
    return basis;
}

struct ControlAbstraction {
    // place = (atom, state) flattened
    std::vector<std::uint32_t> place_base;  // per atom
    std::size_t num_places = 0;
    std::vector<std::vector<std::uint32_t>> local_reachable;  // per atom, sorted state ids
    std::vector<std::vector<long long>> invariants;           // kernel basis over places
    std::vector<long long> invariant_rhs;                     // y . m0
    bool invariants_usable = false;
    // per atom: per port: per state: has transition with syntactically true guard
    std::vector<std::vector<std::vector<bool>>> definite_port;
};

inline ControlAbstraction build_control_abstraction(const System& sys) {
    ControlAbstraction abs;
    abs.place_base.resize(sys.atoms.size());
    for (std::uint32_t a = 0; a < sys.atoms.size(); ++a) {
        abs.place_base[a] = std::uint32_t(abs.num_places);
        abs.num_places += sys.atoms[a].def->states.size();
    }

    // local control reachability, guards and synchronization ignored
    abs.local_reachable.resize(sys.atoms.size());
    abs.definite_port.resize(sys.atoms.size());
    for (std::uint32_t a = 0; a < sys.atoms.size(); ++a) {
        const AtomInstance& inst = sys.atoms[a];
        std::size_t nstates = inst.def->states.size();
        std::vector<bool> seen(nstates, false);
        std::deque<std::uint32_t> q{inst.init_state};
        seen[inst.init_state] = true;
        while (!q.empty()) {
            std::uint32_t s = q.front();
            q.pop_front();
            for (const auto& t : inst.transitions) {
                if (t.source == s && !seen[t.target]) {
                    seen[t.target] = true;
                    q.push_back(t.target);
                }
            }
        }
        for (std::uint32_t s = 0; s < nstates; ++s)
            if (seen[s]) abs.local_reachable[a].push_back(s);

        abs.definite_port[a].assign(inst.def->ports.size(), std::vector<bool>(nstates, false));
        for (const auto& t : inst.transitions)
            if (t.guard_const_true) abs.definite_port[a][t.port][t.source] = true;
    }

    // place invariants: nullspace of the interaction incidence matrix
    try {
        std::set<std::vector<long long>> rows;
        constexpr std::size_t kMaxCombos = 1024;
        for (const Interaction& ix : sys.interactions) {
            // one incidence vector per combination of transition choices
            std::vector<std::vector<const AtomInstance::CompiledTransition*>> options;
            bool firable = true;
            for (const auto& [atom, port] : ix.leaves) {
                std::vector<const AtomInstance::CompiledTransition*> opts;
                for (const auto& t : sys.atoms[atom].transitions)
                    if (t.port == port) opts.push_back(&t);
                if (opts.empty()) firable = false;  // a member port with no transitions never fires
                options.push_back(std::move(opts));
            }
            if (!firable) continue;
            std::size_t combos = 1;
            for (const auto& o : options) {
                combos *= o.size();
                if (combos > kMaxCombos) throw FracOverflow{};
            }
            for (std::size_t c = 0; c < combos; ++c) {
                std::vector<long long> row(abs.num_places, 0);
                std::size_t rest = c;
                bool nonzero = false;
                for (std::size_t l = 0; l < options.size(); ++l) {
                    const auto* t = options[l][rest % options[l].size()];
                    rest /= options[l].size();
                    if (t->source == t->target) continue;
                    std::uint32_t atom = ix.leaves[l].first;
                    row[abs.place_base[atom] + t->source] -= 1;
                    row[abs.place_base[atom] + t->target] += 1;
                    nonzero = true;
                }
                if (nonzero) rows.insert(std::move(row));
            }
        }
        std::vector<std::vector<Frac>> m;
        m.reserve(rows.size());
        for (const auto& r : rows) {
            std::vector<Frac> fr(abs.num_places);
            for (std::size_t c = 0; c < abs.num_places; ++c) fr[c] = Frac{r[c], 1};
            m.push_back(std::move(fr));
        }
        abs.invariants = integer_kernel(std::move(m), abs.num_places);
        for (const auto& y : abs.invariants) {
            long long rhs = 0;
            for (std::uint32_t a = 0; a < sys.atoms.size(); ++a)
                rhs += y[abs.place_base[a] + sys.atoms[a].init_state];
            abs.invariant_rhs.push_back(rhs);
        }
        abs.invariants_usable = true;
    } catch (const FracOverflow&) {
        abs.invariants.clear();
        abs.invariant_rhs.clear();
        abs.invariants_usable = false;
    }
    return abs;
}

inline std::string describe_tuple(const System& sys, const std::vector<std::uint32_t>& tuple) {
    std::string out;
    for (std::uint32_t a = 0; a < sys.atoms.size(); ++a) {
        if (a) out += " & ";
        out += sys.atoms[a].path + "@" + sys.atoms[a].def->states[tuple[a]];
    }
    return out;
}

}  // namespace detail

/// Compositional deadlock check in the DFinder style: over-approximate the
/// reachable control states (local reachability filtered by place invariants
/// derived from the synchronization structure), flag every combination where
/// no interaction is definitely enabled, and let exact exploration refute the
/// candidates when affordable. Sound: a model with a reachable deadlock is
/// never reported as Holds.
inline Verdict check_deadlock_compositional(const System& sys, const ExploreLimits& limits = {}) {
    auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    detail::ControlAbstraction abs = detail::build_control_abstraction(sys);

    constexpr std::uint64_t kMaxTuples = 1u << 22;
    std::uint64_t examined = 0;
    bool capped = false;
    std::vector<std::vector<std::uint32_t>> candidates;

    std::vector<std::uint32_t> tuple(sys.atoms.size(), 0);
    std::function<void(std::uint32_t)> enumerate = [&](std::uint32_t a) {
        if (capped || candidates.size() > 64) return;
        if (a == sys.atoms.size()) {
            if (++examined > kMaxTuples) {
                capped = true;
                return;
            }
            if (abs.invariants_usable) {
                for (std::size_t i = 0; i < abs.invariants.size(); ++i) {
                    long long sum = 0;
                    for (std::uint32_t b = 0; b < sys.atoms.size(); ++b)
                        sum += abs.invariants[i][abs.place_base[b] + tuple[b]];
                    if (sum != abs.invariant_rhs[i]) return;  // not coverable by any real run
                }
            }
            for (const Interaction& ix : sys.interactions) {
                if (ix.guard_blocked || !ix.guard_const_true || ix.flows_have_div) continue;
                bool enabled = true;
                for (const auto& [atom, port] : ix.leaves) {
                    if (!abs.definite_port[atom][port][tuple[atom]]) {
                        enabled = false;
                        break;
                    }
                }
                if (enabled) return;  // definitely not a deadlock
            }
            candidates.push_back(tuple);
            return;
        }
        for (std::uint32_t s : abs.local_reachable[a]) {
            tuple[a] = s;
            enumerate(a + 1);
            if (capped) return;
        }
    };
    enumerate(0);  // an empty system yields the empty tuple, which is a candidate

    v.states_explored = examined;
    if (capped) {
        v.status = VerdictStatus::PotentialViolation;
        v.candidates = candidates.size();
        v.message = "abstract control product too large; unresolved candidates remain";
        v.elapsed_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return v;
    }
    if (candidates.empty()) {
        v.status = VerdictStatus::Holds;
        v.candidates = 0;
        v.message = "0 candidates; no reachability analysis needed";
        v.elapsed_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return v;
    }

    // refinement: exact exploration either confirms a real deadlock or
    // refutes every candidate
    StateSpace space = explore(sys, limits);
    Verdict exact = check_deadlock(sys, space);
    v.states_explored += exact.states_explored;
    v.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (exact.status == VerdictStatus::Violated) {
        v.status = VerdictStatus::Violated;
        v.trace = std::move(exact.trace);
        v.candidates = candidates.size();
        v.message = "candidate confirmed by exact exploration: " + exact.message;
        return v;
    }
    if (exact.status == VerdictStatus::Holds) {
        v.status = VerdictStatus::Holds;
        v.candidates = 0;
        v.message = std::to_string(candidates.size()) +
                    " abstract candidate(s) refuted by exact exploration";
        return v;
    }
    v.status = VerdictStatus::PotentialViolation;
    v.candidates = candidates.size();
    v.message = std::to_string(candidates.size()) + " unrefuted candidate(s), first: " +
                detail::describe_tuple(sys, candidates.front());
    return v;
}

/// Replays a trace from the initial configuration by matching each event to
/// an enabled interaction (connector + port set). Returns the final
/// configuration, or nullopt if some event does not match an enabled move.
inline std::optional<Config> replay_trace(const System& sys, const std::vector<TraceEvent>& trace) {
    Config cfg = initialize(sys);
    for (const auto& ev : trace) {
        std::vector<std::uint32_t> enabled = enabled_interactions(sys, cfg);
        bool fired = false;
        for (std::uint32_t id : enabled) {
            const Interaction& ix = sys.interactions[id];
            if (sys.nodes[ix.node].path != ev.connector || ix.port_labels != ev.ports) continue;
            std::optional<Config> next = fire(sys, cfg, id);
            if (!next) return std::nullopt;
            cfg = std::move(*next);
            fired = true;
            break;
        }
        if (!fired) return std::nullopt;
    }
    return cfg;
}

}  // namespace bip
