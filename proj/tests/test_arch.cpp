// Copyright (c) bipkit contributors.
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "bip/arch.hpp"
#include "bip/parser.hpp"
#include "bip/printer.hpp"
#include "helpers.hpp"

using namespace bip;

namespace {

/// Instance renaming over a compound definition, for equality-up-to-renaming.
CompoundDef rename_instances(CompoundDef c, const std::map<std::string, std::string>& ren) {
    auto fix_path = [&](std::string path) {
        auto segs = split_path(path);
        auto it = ren.find(segs[0]);
        if (it == ren.end()) return path;
        std::string out = it->second;
        for (std::size_t i = 1; i < segs.size(); ++i) out += "." + segs[i];
        return out;
    };
    for (auto& inst : c.components)
        if (auto it = ren.find(inst.name); it != ren.end()) inst.name = it->second;
    for (auto& conn : c.connectors) {
        for (auto& end : conn.ends) end.path = fix_path(end.path);
        for (auto& a : conn.up) a.target = fix_path(a.target);
        for (auto& a : conn.down) a.target = fix_path(a.target);
    }
    return c;
}

}  // namespace

TEST_CASE("applying the mutex architecture rebuilds the mutex model up to renaming") {
    Model m = testutil::load_bundled("mutex.bip");
    const ArchitectureDef* arch = m.find_architecture("MutexArch");
    REQUIRE(arch != nullptr);
    ApplicationResult app = apply_architecture(m, *arch, {"Task1", "Task2"});

    CHECK(app.binding == std::vector<std::pair<std::string, std::string>>{{"T1", "Task1"},
                                                                          {"T2", "Task2"}});
    const CompoundDef* applied = app.extended.find_compound(app.compound);
    REQUIRE(applied != nullptr);
    CHECK(validate_model(app.extended).empty());

    CompoundDef renamed = rename_instances(
        *applied, {{"T1", "task1"}, {"T2", "task2"}, {"lock", "coord"}});
    const CompoundDef* original = m.find_compound("Mutex");
    REQUIRE(original != nullptr);
    CHECK(renamed.components == original->components);
    CHECK(renamed.connectors == original->connectors);

    // operand atoms are carried over untouched
    CHECK(*app.extended.find_atom("Task1") == *m.find_atom("Task1"));
    CHECK(*app.extended.find_atom("Task2") == *m.find_atom("Task2"));
}

TEST_CASE("wrong operand count raises ArityMismatch") {
    Model m = testutil::load_bundled("mutex.bip");
    const ArchitectureDef* arch = m.find_architecture("MutexArch");
    CHECK_THROWS_MATCHES(apply_architecture(m, *arch, {"Task1"}), ApplyError,
                         Catch::Matchers::Predicate<ApplyError>([](const ApplyError& e) {
                             return e.kind == ApplyError::Kind::ArityMismatch;
                         }));
}

TEST_CASE("an operand missing an interface port raises InterfaceMismatch naming it") {
    Model m = testutil::load_bundled("mutex.bip");
    // Task2 has ports b2/f2, so it cannot stand in for parameter T1 = {b1, f1}
    const ArchitectureDef* arch = m.find_architecture("MutexArch");
    try {
        apply_architecture(m, *arch, {"Task2", "Task2"});
        FAIL("expected InterfaceMismatch");
    } catch (const ApplyError& e) {
        CHECK(e.kind == ApplyError::Kind::InterfaceMismatch);
        CHECK(e.param == "T1");
        CHECK(e.missing == std::vector<std::string>{"b1", "f1"});
    }
}

TEST_CASE("composition is associative, commutative and idempotent on bundled architectures") {
    Model m = testutil::load_bundled("mutex.bip");
    const ArchitectureDef& a = *m.find_architecture("MutexArch");
    const ArchitectureDef& b = *m.find_architecture("PrecedenceArch");

    CHECK(canonical_architecture(compose(a, b)) == canonical_architecture(compose(b, a)));
    CHECK(canonical_architecture(compose(a, a)) == canonical_architecture(a));
    CHECK(canonical_architecture(compose(compose(a, b), a)) ==
          canonical_architecture(compose(a, compose(b, a))));
}

TEST_CASE("composition laws hold on randomized architectures") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        testutil::ModelGen gen(seed);
        Model m;
        ArchitectureDef a = gen.gen_architecture(m);
        ArchitectureDef b = gen.gen_architecture(m);
        ArchitectureDef c = gen.gen_architecture(m);
        INFO("seed " << seed);
        CHECK(canonical_architecture(compose(a, b)) == canonical_architecture(compose(b, a)));
        CHECK(canonical_architecture(compose(a, a)) == canonical_architecture(a));
        CHECK(canonical_architecture(compose(compose(a, b), c)) ==
              canonical_architecture(compose(a, compose(b, c))));
    }
}

TEST_CASE("parameters with equal names must agree on interfaces") {
    ArchitectureDef a, b;
    a.name = "A";
    a.parts.push_back({"A", {{"P", {"x"}, {}}}, {}, {}, {}, {}});
    b.name = "B";
    b.parts.push_back({"B", {{"P", {"x", "y"}, {}}}, {}, {}, {}, {}});
    CHECK_THROWS_MATCHES(compose(a, b), ApplyError,
                         Catch::Matchers::Predicate<ApplyError>([](const ApplyError& e) {
                             return e.kind == ApplyError::Kind::ParameterInterfaceConflict;
                         }));
}

TEST_CASE("composed mutex and precedence glue fuses the begin connectors") {
    Model m = testutil::load_bundled("mutex.bip");
    ArchitectureDef both =
        compose(*m.find_architecture("MutexArch"), *m.find_architecture("PrecedenceArch"));
    ApplicationResult app = apply_architecture(m, both, {"Task1", "Task2"});
    const CompoundDef* applied = app.extended.find_compound(app.compound);
    REQUIRE(applied != nullptr);

    // b1 fires only together with both coordinators; releases stay binary
    std::set<std::string> shapes;
    for (const auto& conn : applied->connectors) {
        std::string shape;
        std::vector<std::string> paths;
        for (const auto& e : conn.ends) paths.push_back(e.path);
        std::sort(paths.begin(), paths.end());
        for (const auto& p : paths) shape += p + " ";
        shapes.insert(shape);
    }
    CHECK(shapes == std::set<std::string>{
                        "T1.b1 gate.first lock.t ",
                        "T2.b2 gate.other lock.t ",
                        "T1.f1 lock.r ",
                        "T2.f2 lock.r ",
                    });
}

TEST_CASE("certify proves the mutex architecture correct on two-state tasks") {
    Model m = testutil::load_bundled("mutex.bip");
    CertifyResult r = certify(m, *m.find_architecture("MutexArch"), {"Task1", "Task2"});
    CHECK(r.safety.status == VerdictStatus::Holds);
    CHECK(r.deadlock.status == VerdictStatus::Holds);
}

TEST_CASE("certify finds the deadlock with an operand that never releases") {
    Model m = testutil::load_bundled("mutex.bip");
    // f1 is declared (interface refinement passes) but never enabled
    auto pr = parse(
        "atom Stubborn { port b1 port f1 state sleep state work init -> sleep\n"
        "  on b1 from sleep to work }\n");
    REQUIRE(pr.ok());
    m.atoms.push_back(pr.model.atoms[0]);

    CertifyResult r = certify(m, *m.find_architecture("MutexArch"), {"Stubborn", "Task2"});
    CHECK(r.safety.status == VerdictStatus::Holds);  // exclusion still enforced
    REQUIRE(r.deadlock.status == VerdictStatus::Violated);
    CHECK_FALSE(r.deadlock.trace.empty());
}

TEST_CASE("certify proves both properties of the composed architecture") {
    Model m = testutil::load_bundled("mutex.bip");
    ArchitectureDef both =
        compose(*m.find_architecture("MutexArch"), *m.find_architecture("PrecedenceArch"));
    CertifyResult r = certify(m, both, {"Task1", "Task2"});
    CHECK(r.safety.status == VerdictStatus::Holds);
    CHECK(r.deadlock.status == VerdictStatus::Holds);

    // the composed property is the conjunction of the two characteristic ones
    ApplicationResult app = apply_architecture(m, both, {"Task1", "Task2"});
    const PropertyDef* prop = app.extended.find_property(app.property);
    REQUIRE(prop != nullptr);
    REQUIRE(prop->predicate->kind == Expr::Kind::Binary);
    CHECK(prop->predicate->bin == BinaryOp::And);
}

TEST_CASE("applied output re-parses and re-verifies identically") {
    Model m = testutil::load_bundled("mutex.bip");
    ApplicationResult app = apply_architecture(m, *m.find_architecture("MutexArch"),
                                               {"Task1", "Task2"});
    std::string text = pretty_print(app.extended);
    auto pr = parse(text, "applied.bip");
    REQUIRE(pr.ok());
    CHECK(pr.model == app.extended);
    System sys = elaborate(pr.model);
    StateSpace space = explore(sys);
    CHECK(space.states.size() == 3);
    CHECK(check_safety(sys, space, *pr.model.find_property(app.property)).status ==
          VerdictStatus::Holds);
    CHECK(check_deadlock(sys, space).status == VerdictStatus::Holds);
}
