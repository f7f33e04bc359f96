// Copyright (c) bipkit contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bip/engine.hpp"
#include "bip/rng.hpp"
#include "bip/verify.hpp"

namespace bip {

class ResourceLimitError : public std::runtime_error {
public:
    explicit ResourceLimitError(const std::string& what) : std::runtime_error(what) {}
};
class FlattenError : public std::runtime_error {
public:
    explicit FlattenError(const std::string& what) : std::runtime_error(what) {}
};
class VersionMismatch : public std::runtime_error {
public:
    explicit VersionMismatch(const std::string& what) : std::runtime_error(what) {}
};
class ChecksumMismatch : public std::runtime_error {
public:
    explicit ChecksumMismatch(const std::string& what) : std::runtime_error(what) {}
};

/// The reachable global product of a model with priorities already resolved:
/// per state, the maximal enabled interactions as edges carrying compiled
/// guard/action programs. Executable standalone; bisimilar to the source
/// model under engine semantics (checked by co-simulation).
struct FlatAutomaton {
    static constexpr std::uint16_t kVersion = 1;

    struct Var {
        std::string name;
        ValueType type = ValueType::Int;
        Value initial{std::int64_t(0)};
    };
    struct InteractionRec {
        std::string connector;
        std::vector<std::string> ports;
    };
    struct Edge {
        std::uint32_t interaction = 0;
        std::uint32_t guard_prog = 0;   // index into programs
        std::uint32_t action_prog = 0;  // index into programs
        std::uint32_t target = 0;
    };

    std::vector<Var> vars;
    std::vector<InteractionRec> interactions;
    std::vector<Program> programs;
    std::vector<std::vector<Edge>> edges;  // per state; state 0 initial
    std::uint32_t prng_scheme = Xoshiro256StarStar::kSeedingSchemeId;

    std::size_t state_count() const { return edges.size(); }

    bool operator==(const FlatAutomaton& o) const {
        if (vars.size() != o.vars.size() || interactions.size() != o.interactions.size() ||
            programs.size() != o.programs.size() || prng_scheme != o.prng_scheme)
            return false;
        for (std::size_t i = 0; i < vars.size(); ++i)
            if (vars[i].name != o.vars[i].name || vars[i].type != o.vars[i].type ||
                !(vars[i].initial == o.vars[i].initial))
                return false;
        for (std::size_t i = 0; i < interactions.size(); ++i)
            if (interactions[i].connector != o.interactions[i].connector ||
                interactions[i].ports != o.interactions[i].ports)
                return false;
        if (!(programs == o.programs)) return false;
        if (edges.size() != o.edges.size()) return false;
        for (std::size_t s = 0; s < edges.size(); ++s) {
            if (edges[s].size() != o.edges[s].size()) return false;
            for (std::size_t e = 0; e < edges[s].size(); ++e) {
                const Edge &a = edges[s][e], &b = o.edges[s][e];
                if (a.interaction != b.interaction || a.guard_prog != b.guard_prog ||
                    a.action_prog != b.action_prog || a.target != b.target)
                    return false;
            }
        }
        return true;
    }
};

/// Compiles the reachable state graph to the flat automaton. The explored
/// space must be complete; a truncated exploration raises ResourceLimitError.
inline FlatAutomaton flatten(const System& sys, const ExploreLimits& limits = {}) {
    StateSpace space = explore(sys, limits);
    if (space.truncated)
        throw ResourceLimitError("state space exceeds limits; cannot flatten");
    for (std::uint32_t s = 0; s < space.states.size(); ++s)
        if (space.error_out[s])
            throw FlattenError("an interaction fails at runtime in some reachable state; "
                               "the model cannot be flattened faithfully");

    FlatAutomaton fa;
    for (std::uint32_t i = 0; i < sys.vars.size(); ++i)
        fa.vars.push_back({sys.vars[i].path, sys.vars[i].type, space.states[0].vars[i]});
    for (const Interaction& ix : sys.interactions)
        fa.interactions.push_back({sys.nodes[ix.node].path, ix.port_labels});

    std::map<std::pair<std::vector<std::uint8_t>, std::vector<ValueType>>, std::uint32_t> prog_index;
    auto intern_program = [&](const Program& p) {
        auto key = std::make_pair(p.code, p.temp_types);
        auto it = prog_index.find(key);
        if (it != prog_index.end()) return it->second;
        std::uint32_t idx = std::uint32_t(fa.programs.size());
        fa.programs.push_back(p);
        prog_index.emplace(std::move(key), idx);
        return idx;
    };

    fa.edges.resize(space.states.size());
    for (std::uint32_t s = 0; s < space.states.size(); ++s) {
        for (const auto& edge : space.edges[s]) {
            const Interaction& ix = sys.interactions[edge.interaction];
            std::vector<ChosenTransition> chosen;
            FireError err;
            std::optional<Config> next = fire(sys, space.states[s], edge.interaction, &err, &chosen);
            if (!next) throw FlattenError("explored edge failed to re-fire");
            Program action = ix.up_down;
            for (const auto& ct : chosen) {
                const auto& t = sys.atoms[ct.atom].transitions[ct.transition];
                action.code.insert(action.code.end(), t.action.code.begin(), t.action.code.end());
            }
            FlatAutomaton::Edge fe;
            fe.interaction = edge.interaction;
            fe.guard_prog = intern_program(ix.up_guard);
            fe.action_prog = intern_program(action);
            fe.target = edge.target;
            fa.edges[s].push_back(fe);
        }
    }
    return fa;
}

// ---------------------------------------------------------------------------
// Image format: magic "BIPF", u16 version, u64 content hash (FNV-1a over the
// payload), then little-endian tables: strings, variables, PRNG scheme,
// interaction records, program blob, per-state edge records (interaction id,
// guard program offset, action program offset, target).
// ---------------------------------------------------------------------------

using AutomatonImage = std::vector<std::uint8_t>;

namespace detail {

inline std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct ImageReader {
    std::span<const std::uint8_t> data;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > data.size()) throw ChecksumMismatch("image truncated");
    }
    std::uint8_t u8() {
        need(1);
        return data[pos++];
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v;
        std::memcpy(&v, data.data() + pos, 2);
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v;
        std::memcpy(&v, data.data() + pos, 4);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v;
        std::memcpy(&v, data.data() + pos, 8);
        pos += 8;
        return v;
    }
    std::string str(std::size_t len) {
        need(len);
        std::string s(reinterpret_cast<const char*>(data.data() + pos), len);
        pos += len;
        return s;
    }
};

struct ImageWriter {
    std::vector<std::uint8_t> out;
    void u8(std::uint8_t v) { out.push_back(v); }
    void u16(std::uint16_t v) {
        out.push_back(std::uint8_t(v));
        out.push_back(std::uint8_t(v >> 8));
    }
    void u32(std::uint32_t v) { put_u32(out, v); }
    void u64(std::uint64_t v) { put_u64(out, v); }
    void str(const std::string& s) {
        u32(std::uint32_t(s.size()));
        out.insert(out.end(), s.begin(), s.end());
    }
};

}  // namespace detail

/// Deterministic serialization: identical automata yield identical bytes.
inline AutomatonImage emit(const FlatAutomaton& fa) {
    // string table, first-use order
    std::map<std::string, std::uint32_t> string_index;
    std::vector<std::string> strings;
    auto intern = [&](const std::string& s) {
        auto it = string_index.find(s);
        if (it != string_index.end()) return it->second;
        std::uint32_t idx = std::uint32_t(strings.size());
        strings.push_back(s);
        string_index.emplace(s, idx);
        return idx;
    };
    std::vector<std::uint32_t> var_names;
    for (const auto& v : fa.vars) var_names.push_back(intern(v.name));
    std::vector<std::pair<std::uint32_t, std::vector<std::uint32_t>>> ix_names;
    for (const auto& ix : fa.interactions) {
        std::vector<std::uint32_t> ports;
        for (const auto& p : ix.ports) ports.push_back(intern(p));
        ix_names.emplace_back(intern(ix.connector), std::move(ports));
    }

    // program blob; edges reference byte offsets
    detail::ImageWriter blob;
    std::vector<std::uint32_t> prog_offset;
    for (const auto& p : fa.programs) {
        prog_offset.push_back(std::uint32_t(blob.out.size()));
        blob.u32(std::uint32_t(p.temp_types.size()));
        for (ValueType t : p.temp_types) blob.u8(t == ValueType::Bool ? 1 : 0);
        blob.u32(std::uint32_t(p.code.size()));
        blob.out.insert(blob.out.end(), p.code.begin(), p.code.end());
    }

    detail::ImageWriter payload;
    payload.u32(std::uint32_t(strings.size()));
    for (const auto& s : strings) payload.str(s);
    payload.u32(std::uint32_t(fa.vars.size()));
    for (std::size_t i = 0; i < fa.vars.size(); ++i) {
        payload.u32(var_names[i]);
        payload.u8(fa.vars[i].type == ValueType::Bool ? 1 : 0);
        const Value& v = fa.vars[i].initial;
        payload.u64(is_int(v) ? std::uint64_t(as_int(v)) : (as_bool(v) ? 1 : 0));
    }
    payload.u32(fa.prng_scheme);
    payload.u32(std::uint32_t(fa.interactions.size()));
    for (const auto& [conn, ports] : ix_names) {
        payload.u32(conn);
        payload.u32(std::uint32_t(ports.size()));
        for (std::uint32_t p : ports) payload.u32(p);
    }
    payload.u32(std::uint32_t(blob.out.size()));
    payload.out.insert(payload.out.end(), blob.out.begin(), blob.out.end());
    payload.u32(std::uint32_t(fa.edges.size()));
    for (const auto& state_edges : fa.edges) {
        payload.u32(std::uint32_t(state_edges.size()));
        for (const auto& e : state_edges) {
            payload.u32(e.interaction);
            payload.u32(prog_offset[e.guard_prog]);
            payload.u32(prog_offset[e.action_prog]);
            payload.u32(e.target);
        }
    }

    detail::ImageWriter image;
    image.u8('B');
    image.u8('I');
    image.u8('P');
    image.u8('F');
    image.u16(FlatAutomaton::kVersion);
    image.u64(detail::fnv1a64(payload.out));
    image.out.insert(image.out.end(), payload.out.begin(), payload.out.end());
    return image.out;
}

/// load(emit(f)) == f. Rejects foreign magic/corruption with ChecksumMismatch
/// and images from newer format versions with VersionMismatch.
inline FlatAutomaton load(std::span<const std::uint8_t> image) {
    detail::ImageReader r{image, 0};
    if (r.u8() != 'B' || r.u8() != 'I' || r.u8() != 'P' || r.u8() != 'F')
        throw ChecksumMismatch("not a BIPF image (bad magic)");
    std::uint16_t version = r.u16();
    if (version != FlatAutomaton::kVersion)
        throw VersionMismatch("image format version " + std::to_string(version) +
                              " is not supported (expected " +
                              std::to_string(FlatAutomaton::kVersion) + ")");
    std::uint64_t hash = r.u64();
    if (detail::fnv1a64(image.subspan(r.pos)) != hash)
        throw ChecksumMismatch("content hash mismatch");

    FlatAutomaton fa;
    std::uint32_t nstrings = r.u32();
    std::vector<std::string> strings;
    strings.reserve(nstrings);
    for (std::uint32_t i = 0; i < nstrings; ++i) {
        std::uint32_t len = r.u32();
        strings.push_back(r.str(len));
    }
    auto str_at = [&](std::uint32_t i) -> const std::string& {
        if (i >= strings.size()) throw ChecksumMismatch("string index out of range");
        return strings[i];
    };

    std::uint32_t nvars = r.u32();
    for (std::uint32_t i = 0; i < nvars; ++i) {
        FlatAutomaton::Var v;
        v.name = str_at(r.u32());
        v.type = r.u8() ? ValueType::Bool : ValueType::Int;
        std::uint64_t bits = r.u64();
        v.initial = v.type == ValueType::Bool ? Value(bits != 0) : Value(std::int64_t(bits));
        fa.vars.push_back(std::move(v));
    }
    fa.prng_scheme = r.u32();
    std::uint32_t nix = r.u32();
    for (std::uint32_t i = 0; i < nix; ++i) {
        FlatAutomaton::InteractionRec rec;
        rec.connector = str_at(r.u32());
        std::uint32_t nports = r.u32();
        for (std::uint32_t p = 0; p < nports; ++p) rec.ports.push_back(str_at(r.u32()));
        fa.interactions.push_back(std::move(rec));
    }

    std::uint32_t blob_len = r.u32();
    r.need(blob_len);
    std::span<const std::uint8_t> blob = image.subspan(r.pos, blob_len);
    r.pos += blob_len;
    std::map<std::uint32_t, std::uint32_t> prog_at_offset;
    auto program_at = [&](std::uint32_t off) {
        auto it = prog_at_offset.find(off);
        if (it != prog_at_offset.end()) return it->second;
        detail::ImageReader br{blob, off};
        Program p;
        std::uint32_t ntemps = br.u32();
        for (std::uint32_t i = 0; i < ntemps; ++i)
            p.temp_types.push_back(br.u8() ? ValueType::Bool : ValueType::Int);
        std::uint32_t code_len = br.u32();
        br.need(code_len);
        p.code.assign(blob.begin() + br.pos, blob.begin() + br.pos + code_len);
        std::uint32_t idx = std::uint32_t(fa.programs.size());
        fa.programs.push_back(std::move(p));
        prog_at_offset.emplace(off, idx);
        return idx;
    };

    std::uint32_t nstates = r.u32();
    fa.edges.resize(nstates);
    for (std::uint32_t s = 0; s < nstates; ++s) {
        std::uint32_t nedges = r.u32();
        for (std::uint32_t e = 0; e < nedges; ++e) {
            FlatAutomaton::Edge fe;
            fe.interaction = r.u32();
            fe.guard_prog = program_at(r.u32());
            fe.action_prog = program_at(r.u32());
            fe.target = r.u32();
            if (fe.interaction >= fa.interactions.size())
                throw ChecksumMismatch("interaction index out of range");
            if (fe.target >= nstates) throw ChecksumMismatch("target state out of range");
            fa.edges[s].push_back(fe);
        }
    }
    if (r.pos != image.size()) throw ChecksumMismatch("trailing bytes after image payload");
    return fa;
}

struct InterpretResult {
    RunStatus status = RunStatus::Completed;
    std::uint64_t steps_executed = 0;
};

/// Minimal standalone execution of a flat automaton. With the same seed and
/// step budget it reproduces the source model's engine trace byte for byte,
/// including the terminal status (the co-simulation contract).
inline InterpretResult interpret(const FlatAutomaton& fa, std::uint64_t seed,
                                 std::uint64_t max_steps, std::ostream* sink = nullptr) {
    InterpretResult result;
    if (fa.prng_scheme != Xoshiro256StarStar::kSeedingSchemeId)
        throw VersionMismatch("unknown PRNG seeding scheme " + std::to_string(fa.prng_scheme));
    Xoshiro256StarStar rng(seed);
    std::vector<Value> store;
    store.reserve(fa.vars.size());
    for (const auto& v : fa.vars) store.push_back(v.initial);
    std::vector<std::uint32_t> no_states;

    std::uint32_t state = 0;
    std::vector<Value> pre;
    for (std::uint64_t i = 0; i < max_steps; ++i) {
        const auto& edges = fa.edges[state];
        if (edges.empty()) {
            result.status = RunStatus::Deadlock;
            result.steps_executed = i;
            return result;
        }
        const FlatAutomaton::Edge& e = edges[rng.pick(edges.size())];
        VmContext ctx{std::span<Value>(store.data(), store.size()),
                      std::span<const std::uint32_t>(no_states.data(), no_states.size())};
        if (!run_program_bool(fa.programs[e.guard_prog], ctx))
            throw FlattenError("image guard false on its own edge; image corrupt");
        if (sink) pre = store;
        run_program(fa.programs[e.action_prog], ctx);
        if (sink) {
            const auto& rec = fa.interactions[e.interaction];
            TraceEvent ev;
            ev.step = i;
            ev.connector = rec.connector;
            ev.ports = rec.ports;
            for (std::size_t v = 0; v < store.size(); ++v)
                if (!(pre[v] == store[v])) ev.writes.emplace_back(fa.vars[v].name, store[v]);
            std::sort(ev.writes.begin(), ev.writes.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            *sink << ev.json_line();
            sink->put('\n');
        }
        state = e.target;
    }
    result.status = RunStatus::Completed;
    result.steps_executed = max_steps;
    return result;
}

}  // namespace bip
