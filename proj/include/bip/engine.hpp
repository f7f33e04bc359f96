// Copyright (c) bipkit contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "bip/interaction.hpp"
#include "bip/rng.hpp"
#include "bip/system.hpp"

namespace bip {

class InitGuardFalse : public std::runtime_error {
public:
    explicit InitGuardFalse(const std::string& atom_path)
        : std::runtime_error("init guard of " + atom_path + " is false on default values"),
          atom(atom_path) {}
    std::string atom;
};

/// Default-initializes every atom's variables, checks the init guard over the
/// defaults, applies the init action and enters the initial control state.
inline Config initialize(const System& sys) {
    Config cfg = sys.initial_defaults();
    for (std::uint32_t a = 0; a < sys.atoms.size(); ++a) {
        const AtomInstance& inst = sys.atoms[a];
        if (!run_program_bool(inst.init_guard, detail::ro_context(cfg)))
            throw InitGuardFalse(inst.path);
        run_program(inst.init_action, detail::rw_context(cfg));
        cfg.state[a] = inst.init_state;
    }
    return cfg;
}

struct TraceEvent {
    std::uint64_t step = 0;
    std::string connector;
    std::vector<std::string> ports;                    // sorted "instance.port"
    std::vector<std::pair<std::string, Value>> writes;  // changed variables, name-sorted

    /// Newline-delimited structured record; field order and byte layout are
    /// part of the trace format contract.
    std::string json_line() const {
        std::string out = "{\"step\":" + std::to_string(step) + ",\"connector\":\"" + connector +
                          "\",\"ports\":[";
        for (std::size_t i = 0; i < ports.size(); ++i) {
            if (i) out += ',';
            out += '"';
            out += ports[i];
            out += '"';
        }
        out += "],\"writes\":{";
        for (std::size_t i = 0; i < writes.size(); ++i) {
            if (i) out += ',';
            out += '"';
            out += writes[i].first;
            out += "\":";
            out += value_to_string(writes[i].second);
        }
        out += "}}";
        return out;
    }
};

namespace detail {

inline std::vector<std::pair<std::string, Value>> diff_writes(const System& sys, const Config& pre,
                                                              const Config& post,
                                                              const Interaction& ix) {
    std::vector<std::pair<std::string, Value>> writes;
    for (const auto& [atom, port] : ix.leaves) {
        (void)port;
        const AtomInstance& a = sys.atoms[atom];
        for (std::uint32_t s = a.var_base; s < a.var_base + a.num_vars; ++s)
            if (!(pre.vars[s] == post.vars[s])) writes.emplace_back(sys.vars[s].path, post.vars[s]);
    }
    std::sort(writes.begin(), writes.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    return writes;
}

}  // namespace detail

enum class RunStatus { Completed, Deadlock, Error };

inline const char* to_string(RunStatus s) {
    switch (s) {
        case RunStatus::Completed: return "completed";
        case RunStatus::Deadlock: return "deadlock";
        case RunStatus::Error: return "error";
    }
    return "?";
}

struct StepOutcome {
    RunStatus status = RunStatus::Completed;  // Completed here means "fired"
    TraceEvent event;
    FireError error;
};

/// One engine cycle: collect enabled interactions, keep the maximal ones
/// under priority, choose uniformly via the seeded generator, fire. Exactly
/// one generator output is consumed per firing attempt.
inline StepOutcome step(const System& sys, Config& cfg, Xoshiro256StarStar& rng,
                        std::uint64_t step_index, const WarnFn& warn = {}) {
    StepOutcome out;
    std::vector<std::uint32_t> maximal = maximal_enabled(sys, cfg, warn);
    if (maximal.empty()) {
        out.status = RunStatus::Deadlock;
        return out;
    }
    std::uint32_t id = maximal[rng.pick(maximal.size())];
    FireError err;
    std::optional<Config> next = fire(sys, cfg, id, &err);
    if (!next) {
        out.status = RunStatus::Error;
        out.error = err;
        return out;
    }
    const Interaction& ix = sys.interactions[id];
    out.event.step = step_index;
    out.event.connector = sys.nodes[ix.node].path;
    out.event.ports = ix.port_labels;
    out.event.writes = detail::diff_writes(sys, cfg, *next, ix);
    cfg = std::move(*next);
    out.status = RunStatus::Completed;
    return out;
}

struct EngineConfig {
    std::uint64_t seed = 0;
    std::uint64_t max_steps = 0;
    std::ostream* trace_sink = nullptr;
    WarnFn warn;
};

struct RunResult {
    RunStatus status = RunStatus::Completed;
    std::uint64_t steps_executed = 0;  // Deadlock/Error happened at this step index
    FireError error;
    Config final_config;
};

/// Runs up to max_steps interactions from the initial configuration, writing
/// one trace line per fired interaction. Same model + same seed + same step
/// count produce a byte-identical trace stream.
inline RunResult run(const System& sys, const EngineConfig& ec) {
    RunResult result;
    Config cfg = initialize(sys);
    Xoshiro256StarStar rng(ec.seed);

    // repeated engine warnings (e.g. an error-disabled member hit every
    // cycle) are reported once per run
    std::set<std::string> seen_warnings;
    WarnFn warn;
    if (ec.warn)
        warn = [&](const std::string& msg) {
            if (seen_warnings.insert(msg).second) ec.warn(msg);
        };

    for (std::uint64_t i = 0; i < ec.max_steps; ++i) {
        StepOutcome out = step(sys, cfg, rng, i, warn);
        if (out.status != RunStatus::Completed) {
            result.status = out.status;
            result.steps_executed = i;
            result.error = out.error;
            result.final_config = std::move(cfg);
            return result;
        }
        if (ec.trace_sink) {
            *ec.trace_sink << out.event.json_line();
            ec.trace_sink->put('\n');
        }
    }
    result.status = RunStatus::Completed;
    result.steps_executed = ec.max_steps;
    result.final_config = std::move(cfg);
    return result;
}

}  // namespace bip
