// Copyright (c) bipkit contributors.
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "bip/flatten.hpp"
#include "bip/parser.hpp"
#include "bip/validate.hpp"
#include "helpers.hpp"

using namespace bip;

namespace {

System load_system(const std::string& name, Model& storage) {
    storage = testutil::load_bundled(name);
    return elaborate(storage);
}

}  // namespace

TEST_CASE("flattening compiles the explored graph with priorities resolved") {
    Model m;
    System sys = load_system("mutex.bip", m);
    FlatAutomaton fa = flatten(sys);
    CHECK(fa.state_count() == 3);
    std::size_t edges = 0;
    for (const auto& e : fa.edges) edges += e.size();
    CHECK(edges == 4);

    Model t;
    System tsys = load_system("traffic_light.bip", t);
    FlatAutomaton tfa = flatten(tsys);
    CHECK(tfa.state_count() == std::size_t(testutil::traffic_light_state_count()));
    // priority already applied: the boundary states have the sync edge only
    for (const auto& state_edges : tfa.edges) CHECK(state_edges.size() == 1);
}

TEST_CASE("an empty compound flattens to one state with no edges") {
    auto pr = parse("compound Empty { }");
    REQUIRE(pr.ok());
    System sys = elaborate(pr.model);
    FlatAutomaton fa = flatten(sys);
    CHECK(fa.state_count() == 1);
    CHECK(fa.edges[0].empty());
}

TEST_CASE("emit/load is a lossless round trip and deterministic") {
    for (const char* name : {"traffic_light.bip", "mutex.bip", "payload_hk.bip"}) {
        Model m;
        System sys = load_system(name, m);
        FlatAutomaton fa = flatten(sys);
        AutomatonImage image = emit(fa);
        CHECK(emit(fa) == image);  // emit is a pure function
        FlatAutomaton back = load(image);
        CHECK(back == fa);
        CHECK(emit(back) == image);
    }
}

TEST_CASE("a truncated image fails the checksum") {
    Model m;
    System sys = load_system("mutex.bip", m);
    AutomatonImage image = emit(flatten(sys));
    AutomatonImage cut(image.begin(), image.end() - 5);
    CHECK_THROWS_AS(load(cut), ChecksumMismatch);

    AutomatonImage flipped = image;
    flipped[flipped.size() / 2] ^= 0x40;
    CHECK_THROWS_AS(load(flipped), ChecksumMismatch);

    AutomatonImage garbage{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13};
    CHECK_THROWS_AS(load(garbage), ChecksumMismatch);
}

TEST_CASE("an image from a future format version is rejected") {
    Model m;
    System sys = load_system("mutex.bip", m);
    AutomatonImage image = emit(flatten(sys));
    image[4] = 0x02;  // bump the version field
    image[5] = 0x00;
    CHECK_THROWS_AS(load(image), VersionMismatch);
}

TEST_CASE("flattening refuses a space beyond the limits") {
    Model m;
    System sys = load_system("traffic_light.bip", m);
    CHECK_THROWS_AS(flatten(sys, {.max_states = 8, .max_seconds = 0}), ResourceLimitError);
}

TEST_CASE("interpreter and engine agree on traces and terminal status") {
    for (const char* name : {"traffic_light.bip", "mutex.bip", "payload_hk.bip"}) {
        Model m;
        System sys = load_system(name, m);
        FlatAutomaton fa = load(emit(flatten(sys)));
        for (std::uint64_t seed : {1, 2, 3}) {
            std::ostringstream et, it;
            RunResult er = run(sys, {.seed = seed, .max_steps = 3000, .trace_sink = &et, .warn = {}});
            InterpretResult ir = interpret(fa, seed, 3000, &it);
            INFO(name << " seed " << seed);
            CHECK(et.str() == it.str());
            CHECK(er.status == ir.status);
            CHECK(er.steps_executed == ir.steps_executed);
        }
    }
}

TEST_CASE("both executions deadlock at the same step") {
    Model m;
    System sys = load_system("broken_mutex.bip", m);
    FlatAutomaton fa = flatten(sys);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        std::ostringstream et, it;
        RunResult er = run(sys, {.seed = seed, .max_steps = 1000, .trace_sink = &et, .warn = {}});
        InterpretResult ir = interpret(fa, seed, 1000, &it);
        CHECK(er.status == ir.status);
        CHECK(er.steps_executed == ir.steps_executed);
        CHECK(et.str() == it.str());
    }
    // the automaton has a sink state because the model has a deadlock
    bool has_sink = false;
    for (const auto& e : fa.edges) has_sink |= e.empty();
    CHECK(has_sink);
}
