// Copyright (c) bipkit contributors.
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "helpers.hpp"

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string temp_path(const std::string& tag) {
    static int counter = 0;
    return "/tmp/bip_cli_test_" + std::to_string(::getpid()) + "_" + tag + "_" +
           std::to_string(counter++);
}

CliResult run_cli(const std::string& args, const std::string& env = "") {
    std::string out_file = temp_path("out"), err_file = temp_path("err");
    std::string cmd = env + " " + std::string(BIP_CLI_PATH) + " " + args + " >" + out_file +
                      " 2>" + err_file;
    int rc = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = testutil::slurp(out_file);
    r.err = testutil::slurp(err_file);
    std::remove(out_file.c_str());
    std::remove(err_file.c_str());
    return r;
}

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

}  // namespace

TEST_CASE("check accepts the bundled models and rejects bad input") {
    for (const char* name : {"traffic_light.bip", "mutex.bip", "broken_mutex.bip",
                             "payload_hk.bip", "cubeth_reduced.bip"}) {
        auto r = run_cli("check " + testutil::model_path(name));
        INFO(r.out << r.err);
        CHECK(r.exit_code == 0);
    }
    std::string bad = temp_path("bad") + ".bip";
    {
        std::ofstream f(bad);
        f << "atom A { port p port p }";
    }
    auto r = run_cli("check " + bad);
    CHECK(r.exit_code == 2);
    CHECK(r.out.find("dup-port") != std::string::npos);
    std::remove(bad.c_str());

    CHECK(run_cli("check /no/such/file.bip").exit_code == 2);
}

TEST_CASE("simulate emits one trace line per step and exit code 0") {
    auto r = run_cli("simulate " + testutil::model_path("traffic_light.bip") +
                     " --seed 1 --steps 100");
    CHECK(r.exit_code == 0);
    CHECK(count_lines(r.out) == 100);
    CHECK(r.out.find("{\"step\":0,\"connector\":\"tick\"") == 0);
}

TEST_CASE("simulate reports a deadlock with exit code 1") {
    auto r = run_cli("simulate " + testutil::model_path("broken_mutex.bip") +
                     " --seed 2 --steps 100");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("\"status\":\"deadlock\"") != std::string::npos);
}

TEST_CASE("verify --deadlock --mode compositional answers Holds with 0 candidates") {
    auto r = run_cli("verify " + testutil::model_path("mutex.bip") +
                     " --deadlock --mode compositional");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"verdict\":\"Holds\"") != std::string::npos);
    CHECK(r.out.find("\"candidates\":0") != std::string::npos);
    CHECK(r.out.find("0 candidates") != std::string::npos);
}

TEST_CASE("verify prints a counterexample trace for the broken mutex") {
    auto r = run_cli("verify " + testutil::model_path("broken_mutex.bip") + " --deadlock");
    CHECK(r.exit_code == 1);
    CHECK(r.out.find("\"verdict\":\"Violated\"") != std::string::npos);
    CHECK(r.out.find("counterexample trace:") != std::string::npos);
    CHECK(r.out.find("\"connector\":\"take2\"") != std::string::npos);
}

TEST_CASE("verify --property checks a named safety property") {
    auto r = run_cli("verify " + testutil::model_path("mutex.bip") +
                     " --property mutual_exclusion");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"verdict\":\"Holds\"") != std::string::npos);

    auto missing = run_cli("verify " + testutil::model_path("mutex.bip") + " --property nope");
    CHECK(missing.exit_code == 2);

    auto neither = run_cli("verify " + testutil::model_path("mutex.bip"));
    CHECK(neither.exit_code == 2);
}

TEST_CASE("BIP_MAX_STATES caps exploration through the environment") {
    auto r = run_cli("verify " + testutil::model_path("traffic_light.bip") + " --deadlock",
                     "BIP_MAX_STATES=10");
    CHECK(r.exit_code == 3);
    CHECK(r.out.find("\"verdict\":\"ResourceLimit\"") != std::string::npos);
}

TEST_CASE("apply writes a composed model that re-verifies") {
    std::string out = temp_path("applied") + ".bip";
    auto r = run_cli("apply " + testutil::model_path("mutex.bip") +
                     " --arch MutexArch+PrecedenceArch --operands Task1,Task2 --out " + out);
    INFO(r.err);
    CHECK(r.exit_code == 0);
    CHECK(r.err.find("\"binding\":{\"T1\":\"Task1\",\"T2\":\"Task2\"}") != std::string::npos);

    auto check = run_cli("check " + out);
    CHECK(check.exit_code == 0);
    auto verify = run_cli("verify " + out + " --property arch_mutex_and_arch_precedence");
    CHECK(verify.exit_code == 0);
    auto deadlock = run_cli("verify " + out + " --deadlock");
    CHECK(deadlock.exit_code == 0);
    std::remove(out.c_str());

    auto bad = run_cli("apply " + testutil::model_path("mutex.bip") +
                       " --arch MutexArch --operands Task1");
    CHECK(bad.exit_code == 2);
}

TEST_CASE("flatten and run-image reproduce the engine trace") {
    std::string image = temp_path("image") + ".bipf";
    std::string trace_a = temp_path("ta"), trace_b = temp_path("tb");
    auto f = run_cli("flatten " + testutil::model_path("mutex.bip") + " --out " + image);
    CHECK(f.exit_code == 0);
    CHECK(f.out.find("\"states\":3") != std::string::npos);

    auto sim = run_cli("simulate " + testutil::model_path("mutex.bip") +
                       " --seed 7 --steps 500 --trace " + trace_a);
    CHECK(sim.exit_code == 0);
    auto img = run_cli("run-image " + image + " --seed 7 --steps 500 --trace " + trace_b);
    CHECK(img.exit_code == 0);
    CHECK(testutil::slurp(trace_a) == testutil::slurp(trace_b));
    CHECK_FALSE(testutil::slurp(trace_a).empty());

    // corrupt image is a usage error
    {
        std::ofstream f2(image, std::ios::binary | std::ios::app);
        f2 << "garbage";
    }
    CHECK(run_cli("run-image " + image + " --seed 1 --steps 10").exit_code == 2);

    std::remove(image.c_str());
    std::remove(trace_a.c_str());
    std::remove(trace_b.c_str());
}

TEST_CASE("unknown flags and subcommands are usage errors") {
    CHECK(run_cli("frobnicate x.bip").exit_code == 2);
    CHECK(run_cli("simulate").exit_code == 2);
}
