// Copyright (c) bipkit contributors.
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "bip/parser.hpp"
#include "bip/printer.hpp"
#include "bip/validate.hpp"
#include "helpers.hpp"

using namespace bip;

namespace {

void check_roundtrip(const Model& m, const std::string& what) {
    std::string text = pretty_print(m);
    auto pr = parse(text, what + " (printed)");
    INFO("printed text:\n" << text);
    for (const auto& d : pr.diagnostics) INFO(d.format());
    REQUIRE(pr.ok());
    CHECK(pr.model == m);
}

}  // namespace

TEST_CASE("minimal atom prints in canonical single-line form") {
    auto pr = parse("atom A { state s0 init -> s0 }");
    REQUIRE(pr.ok());
    CHECK(pretty_print(pr.model) == "atom A { state s0 init -> s0 }\n");
}

TEST_CASE("bundled models round-trip through print and parse") {
    for (const char* name : {"traffic_light.bip", "mutex.bip", "broken_mutex.bip",
                             "payload_hk.bip", "cubeth_reduced.bip"}) {
        Model m = testutil::load_bundled(name);
        check_roundtrip(m, name);
    }
}

TEST_CASE("printed text of well-formed models validates cleanly") {
    Model m = testutil::load_bundled("mutex.bip");
    auto pr = parse(pretty_print(m));
    auto diags = validate_model(pr.model);
    CHECK_FALSE(has_errors(diags));
}

TEST_CASE("random models round-trip") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        testutil::ModelGen gen(seed);
        testutil::GenOptions opt;
        opt.dataflow = true;
        opt.hierarchy = true;
        opt.properties = true;
        opt.architectures = true;
        Model m = gen.generate(opt);
        auto diags = validate_model(m);
        INFO("seed " << seed);
        for (const auto& d : diags) INFO(d.format());
        REQUIRE_FALSE(has_errors(diags));
        check_roundtrip(m, "random seed " + std::to_string(seed));
    }
}

TEST_CASE("printing is deterministic") {
    Model m = testutil::load_bundled("payload_hk.bip");
    CHECK(pretty_print(m) == pretty_print(m));
}

TEST_CASE("expression printing uses minimal parentheses") {
    auto pr = parse("property p { (1 + 2) * 3 - -4 / 5 == 0 || false }");
    REQUIRE(pr.ok());
    std::string text = pretty_print(pr.model);
    CHECK(text.find("(1 + 2) * 3") != std::string::npos);
    auto again = parse(text);
    REQUIRE(again.ok());
    CHECK(expr_equal(again.model.properties[0].predicate, pr.model.properties[0].predicate));
}
