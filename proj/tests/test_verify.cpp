// Copyright (c) bipkit contributors.
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "bip/parser.hpp"
#include "bip/validate.hpp"
#include "bip/verify.hpp"
#include "helpers.hpp"

using namespace bip;

namespace {

std::size_t edge_count(const StateSpace& space) {
    std::size_t n = 0;
    for (const auto& e : space.edges) n += e.size();
    return n;
}

}  // namespace

TEST_CASE("mutex reachable space matches the brute-force oracle") {
    auto oracle = testutil::mutex_brute_force();
    // frozen oracle results: 3 control states, 4 moves, exclusive, live
    REQUIRE(oracle.reachable.size() == 3);
    REQUIRE(oracle.edges == 4);
    REQUIRE_FALSE(oracle.both_at_work_reachable);
    REQUIRE_FALSE(oracle.deadlock_reachable);

    Model m = testutil::load_bundled("mutex.bip");
    System sys = elaborate(m);
    StateSpace space = explore(sys);
    CHECK_FALSE(space.truncated);
    CHECK(space.states.size() == oracle.reachable.size());
    CHECK(edge_count(space) == std::size_t(oracle.edges));

    CHECK(check_deadlock(sys, space).status == VerdictStatus::Holds);
    CHECK(check_safety(sys, space, *m.find_property("mutual_exclusion")).status ==
          VerdictStatus::Holds);
}

TEST_CASE("broken mutex deadlocks exactly as the oracle predicts") {
    auto oracle = testutil::mutex_brute_force(/*with_release2=*/false);
    REQUIRE(oracle.deadlock_reachable);

    Model m = testutil::load_bundled("broken_mutex.bip");
    System sys = elaborate(m);
    StateSpace space = explore(sys);
    Verdict v = check_deadlock(sys, space);
    REQUIRE(v.status == VerdictStatus::Violated);
    REQUIRE(v.trace.size() == 1);  // take2 leads straight into the stuck state
    CHECK(v.trace[0].connector == "take2");

    // the counterexample replays through the engine into a deadlocked state
    auto final_cfg = replay_trace(sys, v.trace);
    REQUIRE(final_cfg.has_value());
    CHECK(enabled_interactions(sys, *final_cfg).empty());
    std::uint32_t task2 = sys.atom_index("task2");
    CHECK(sys.atoms[task2].def->states[final_cfg->state[task2]] == "work");
}

TEST_CASE("traffic light space has the closed-form size and no deadlock") {
    Model m = testutil::load_bundled("traffic_light.bip");
    System sys = elaborate(m);
    StateSpace space = explore(sys);
    CHECK_FALSE(space.truncated);
    CHECK(space.states.size() == std::size_t(testutil::traffic_light_state_count()));
    CHECK(check_deadlock(sys, space).status == VerdictStatus::Holds);
}

TEST_CASE("exploration is deterministic") {
    Model m = testutil::load_bundled("payload_hk.bip");
    System sys = elaborate(m);
    StateSpace a = explore(sys);
    StateSpace b = explore(sys);
    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t s = 0; s < a.states.size(); ++s) {
        CHECK(sys.encode(a.states[s]) == sys.encode(b.states[s]));
        REQUIRE(a.edges[s].size() == b.edges[s].size());
        for (std::size_t e = 0; e < a.edges[s].size(); ++e) {
            CHECK(a.edges[s][e].interaction == b.edges[s][e].interaction);
            CHECK(a.edges[s][e].target == b.edges[s][e].target);
        }
    }
}

TEST_CASE("every explored edge is an engine move and vice versa") {
    Model m = testutil::load_bundled("payload_hk.bip");
    System sys = elaborate(m);
    StateSpace space = explore(sys);
    Xoshiro256StarStar rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        std::uint32_t s = std::uint32_t(rng.pick(space.states.size()));
        auto maximal = maximal_enabled(sys, space.states[s]);
        REQUIRE(maximal.size() == space.edges[s].size());
        for (std::size_t e = 0; e < maximal.size(); ++e) {
            CHECK(maximal[e] == space.edges[s][e].interaction);
            auto next = fire(sys, space.states[s], maximal[e]);
            REQUIRE(next.has_value());
            CHECK(sys.encode(*next) == sys.encode(space.states[space.edges[s][e].target]));
        }
    }
}

TEST_CASE("two unconstrained tasks violate mutual exclusion within two steps") {
    auto pr = parse(
        "atom Task1 { port b1 port f1 state sleep state work init -> sleep\n"
        "  on b1 from sleep to work on f1 from work to sleep }\n"
        "atom Task2 { port b2 port f2 state sleep state work init -> sleep\n"
        "  on b2 from sleep to work on f2 from work to sleep }\n"
        "compound Free { component task1 : Task1 component task2 : Task2\n"
        "  connector c1(task1.b1) connector c2(task2.b2)\n"
        "  connector c3(task1.f1) connector c4(task2.f2) }\n"
        "property mutual_exclusion { !(task1@work && task2@work) }\n");
    REQUIRE(pr.ok());
    System sys = elaborate(pr.model);
    StateSpace space = explore(sys);
    Verdict v = check_safety(sys, space, *pr.model.find_property("mutual_exclusion"));
    REQUIRE(v.status == VerdictStatus::Violated);
    CHECK(v.trace.size() <= 2);
    // replaying the trace reaches a state falsifying the predicate
    auto cfg = replay_trace(sys, v.trace);
    REQUIRE(cfg.has_value());
    std::uint32_t t1 = sys.atom_index("task1"), t2 = sys.atom_index("task2");
    CHECK(sys.atoms[t1].def->states[cfg->state[t1]] == "work");
    CHECK(sys.atoms[t2].def->states[cfg->state[t2]] == "work");
}

TEST_CASE("a tautology property holds on any space") {
    Model m = testutil::load_bundled("broken_mutex.bip");
    PropertyDef truth{"truth", Expr::make_const(Value(true)), {}};
    System sys = elaborate(m);
    StateSpace space = explore(sys);
    CHECK(check_safety(sys, space, truth).status == VerdictStatus::Holds);
}

TEST_CASE("exploration respects state limits and reports truncation") {
    Model m = testutil::load_bundled("traffic_light.bip");
    System sys = elaborate(m);
    StateSpace space = explore(sys, {.max_states = 10, .max_seconds = 0});
    CHECK(space.truncated);
    CHECK(space.states.size() <= 10);
    CHECK(check_deadlock(sys, space).status == VerdictStatus::ResourceLimit);
}

TEST_CASE("compositional mode proves the mutex deadlock-free with zero candidates") {
    Model m = testutil::load_bundled("mutex.bip");
    System sys = elaborate(m);
    Verdict v = check_deadlock_compositional(sys);
    CHECK(v.status == VerdictStatus::Holds);
    CHECK(v.candidates == 0);
    CHECK(v.message.find("0 candidates") != std::string::npos);
}

TEST_CASE("compositional mode flags guard-disabled combinations") {
    // the only interaction from s1 is guard-blocked, so the abstraction must
    // flag the combination even though control-wise something seems enabled
    auto pr = parse(
        "atom A { port p port q state s0 state s1 init -> s0\n"
        "  on p from s0 to s1 on q from s1 to s1 provided false }\n"
        "compound C { component a : A connector k(a.p) connector l(a.q) }\n");
    REQUIRE(pr.ok());
    System sys = elaborate(pr.model);
    Verdict v = check_deadlock_compositional(sys);
    // refined by exact exploration: the deadlock is real
    CHECK(v.status == VerdictStatus::Violated);
    CHECK_FALSE(v.trace.empty());
}

TEST_CASE("compositional mode is exact on a single self-loop atom") {
    auto pr = parse(
        "atom A { port p state s init -> s on p from s to s }\n"
        "compound C { component a : A connector k(a.p) }\n");
    REQUIRE(pr.ok());
    System sys = elaborate(pr.model);
    Verdict v = check_deadlock_compositional(sys);
    CHECK(v.status == VerdictStatus::Holds);
    CHECK(v.candidates == 0);

    StateSpace space = explore(sys);
    CHECK(space.states.size() == 1);
    CHECK(edge_count(space) == 1);
}

TEST_CASE("compositional mode never holds when a deadlock is reachable") {
    Model m = testutil::load_bundled("broken_mutex.bip");
    System sys = elaborate(m);
    Verdict v = check_deadlock_compositional(sys);
    CHECK(v.status != VerdictStatus::Holds);
}

TEST_CASE("an empty model deadlocks immediately and is reported") {
    auto pr = parse("compound Empty { }");
    REQUIRE(pr.ok());
    System sys = elaborate(pr.model);
    StateSpace space = explore(sys);
    CHECK(space.states.size() == 1);
    CHECK(edge_count(space) == 0);
    CHECK(check_deadlock(sys, space).status == VerdictStatus::Violated);
    CHECK(check_deadlock_compositional(sys).status == VerdictStatus::Violated);
}
