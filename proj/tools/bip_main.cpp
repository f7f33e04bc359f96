// Copyright (c) bipkit contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front door: check, simulate, verify, apply, flatten, run-image.
// Exit codes: 0 success/Holds, 1 violation or deadlock found, 2 usage or
// parse error, 3 resource limit, 4 internal error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bip/arch.hpp"
#include "bip/engine.hpp"
#include "bip/flatten.hpp"
#include "bip/parser.hpp"
#include "bip/printer.hpp"
#include "bip/validate.hpp"
#include "bip/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolated = 1;
constexpr int kExitUsage = 2;
constexpr int kExitResourceLimit = 3;
constexpr int kExitInternal = 4;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bip::Model load_model(const std::string& path, bool print_diags = true) {
    bip::ParseResult pr = bip::parse(read_file(path), path);
    std::vector<bip::Diagnostic> diags = pr.diagnostics;
    auto vd = bip::validate_model(pr.model);
    diags.insert(diags.end(), vd.begin(), vd.end());
    if (print_diags)
        for (const auto& d : diags) std::cerr << d.format() << "\n";
    if (bip::has_errors(diags)) throw UsageError("'" + path + "' has errors");
    return std::move(pr.model);
}

bip::ExploreLimits limits_from(std::uint64_t max_states, double max_seconds) {
    bip::ExploreLimits lim;
    if (max_states == 0) {
        if (const char* env = std::getenv("BIP_MAX_STATES")) {
            char* end = nullptr;
            unsigned long long v = std::strtoull(env, &end, 10);
            if (end && *end == '\0' && v > 0) max_states = v;
        }
    }
    if (max_states > 0) lim.max_states = max_states;
    lim.max_seconds = max_seconds;
    return lim;
}

int cmd_check(const std::string& path) {
    bip::ParseResult pr = bip::parse(read_file(path), path);
    std::vector<bip::Diagnostic> diags = pr.diagnostics;
    auto vd = bip::validate_model(pr.model);
    diags.insert(diags.end(), vd.begin(), vd.end());
    for (const auto& d : diags) std::cout << d.format() << "\n";
    std::size_t errors = 0, warnings = 0;
    for (const auto& d : diags) (d.severity == bip::Severity::Error ? errors : warnings)++;
    std::cout << path << ": " << errors << " error(s), " << warnings << " warning(s)\n";
    return errors ? kExitUsage : kExitOk;
}

int run_trace_common(const bip::RunResult& result, std::uint64_t steps) {
    nlohmann::ordered_json summary;
    summary["status"] = bip::to_string(result.status);
    summary["steps"] = result.steps_executed;
    if (result.status == bip::RunStatus::Error) summary["error"] = result.error.detail;
    std::cerr << summary.dump() << "\n";
    (void)steps;
    switch (result.status) {
        case bip::RunStatus::Completed: return kExitOk;
        case bip::RunStatus::Deadlock: return kExitViolated;
        case bip::RunStatus::Error: return kExitInternal;
    }
    return kExitInternal;
}

int cmd_simulate(const std::string& path, std::uint64_t seed, std::uint64_t steps,
                 const std::string& trace_path) {
    bip::Model model = load_model(path);
    bip::System sys = bip::elaborate(model);
    std::ofstream trace_file;
    std::ostream* sink = &std::cout;
    if (!trace_path.empty()) {
        trace_file.open(trace_path, std::ios::binary);
        if (!trace_file) throw UsageError("cannot open trace file '" + trace_path + "'");
        sink = &trace_file;
    }
    bip::EngineConfig ec;
    ec.seed = seed;
    ec.max_steps = steps;
    ec.trace_sink = sink;
    ec.warn = [](const std::string& msg) { std::cerr << "warning: " << msg << "\n"; };
    bip::RunResult result = bip::run(sys, ec);
    return run_trace_common(result, steps);
}

void print_verdict(const std::string& kind, const std::string& target, const bip::Verdict& v) {
    nlohmann::ordered_json j;
    j["check"] = kind;
    if (!target.empty()) j["property"] = target;
    j["verdict"] = bip::to_string(v.status);
    j["states"] = v.states_explored;
    j["candidates"] = v.candidates;
    j["elapsed_seconds"] = v.elapsed_seconds;
    j["message"] = v.message;
    std::cout << j.dump() << "\n";
    std::cout << bip::to_string(v.status) << ": " << v.message << "\n";
    if (v.status == bip::VerdictStatus::Violated && !v.trace.empty()) {
        std::cout << "counterexample trace:\n";
        for (const auto& ev : v.trace) std::cout << ev.json_line() << "\n";
    }
}

int verdict_exit(const bip::Verdict& v) {
    switch (v.status) {
        case bip::VerdictStatus::Holds: return kExitOk;
        case bip::VerdictStatus::Violated: return kExitViolated;
        case bip::VerdictStatus::PotentialViolation: return kExitViolated;
        case bip::VerdictStatus::ResourceLimit: return kExitResourceLimit;
    }
    return kExitInternal;
}

int cmd_verify(const std::string& path, bool deadlock, const std::string& property,
               const std::string& mode, std::uint64_t max_states, double max_seconds) {
    bip::Model model = load_model(path);
    bip::System sys = bip::elaborate(model);
    bip::ExploreLimits lim = limits_from(max_states, max_seconds);

    if (mode == "compositional") {
        if (!deadlock)
            throw UsageError("--mode compositional supports --deadlock only");
        bip::Verdict v = bip::check_deadlock_compositional(sys, lim);
        print_verdict("deadlock-compositional", "", v);
        return verdict_exit(v);
    }
    bip::StateSpace space = bip::explore(sys, lim);
    if (deadlock) {
        bip::Verdict v = bip::check_deadlock(sys, space);
        print_verdict("deadlock", "", v);
        return verdict_exit(v);
    }
    const bip::PropertyDef* prop = model.find_property(property);
    if (!prop) throw UsageError("property '" + property + "' is not defined in '" + path + "'");
    bip::Verdict v = bip::check_safety(sys, space, *prop);
    print_verdict("safety", property, v);
    return verdict_exit(v);
}

int cmd_apply(const std::string& path, const std::string& arch_spec, const std::string& operands,
              const std::string& out_path) {
    bip::Model model = load_model(path);

    // "--arch A+B" composes the named architectures
    std::vector<std::string> arch_names;
    {
        std::stringstream ss(arch_spec);
        std::string item;
        while (std::getline(ss, item, '+'))
            if (!item.empty()) arch_names.push_back(item);
    }
    if (arch_names.empty()) throw UsageError("--arch needs at least one architecture name");
    std::optional<bip::ArchitectureDef> arch;
    for (const auto& name : arch_names) {
        const bip::ArchitectureDef* def = model.find_architecture(name);
        if (!def) throw UsageError("architecture '" + name + "' is not defined in '" + path + "'");
        arch = arch ? bip::compose(*arch, *def) : *def;
    }

    std::vector<std::string> operand_names;
    {
        std::stringstream ss(operands);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) operand_names.push_back(item);
    }

    bip::ApplicationResult app = bip::apply_architecture(model, *arch, operand_names);
    auto diags = bip::validate_model(app.extended);
    for (const auto& d : diags) std::cerr << d.format() << "\n";
    if (bip::has_errors(diags)) return kExitInternal;

    std::string text = bip::pretty_print(app.extended);
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw UsageError("cannot open output file '" + out_path + "'");
        out << text;
    }
    nlohmann::ordered_json j;
    j["compound"] = app.compound;
    j["property"] = app.property;
    for (const auto& [param, operand] : app.binding) j["binding"][param] = operand;
    std::cerr << j.dump() << "\n";
    return kExitOk;
}

int cmd_flatten(const std::string& path, const std::string& out_path, std::uint64_t max_states,
                double max_seconds) {
    bip::Model model = load_model(path);
    bip::System sys = bip::elaborate(model);
    bip::FlatAutomaton fa = bip::flatten(sys, limits_from(max_states, max_seconds));
    bip::AutomatonImage image = bip::emit(fa);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw UsageError("cannot open output file '" + out_path + "'");
    out.write(reinterpret_cast<const char*>(image.data()), std::streamsize(image.size()));
    nlohmann::ordered_json j;
    j["states"] = fa.state_count();
    j["interactions"] = fa.interactions.size();
    j["programs"] = fa.programs.size();
    j["image_bytes"] = image.size();
    std::cout << j.dump() << "\n";
    return kExitOk;
}

int cmd_run_image(const std::string& image_path, std::uint64_t seed, std::uint64_t steps,
                  const std::string& trace_path) {
    std::string bytes = read_file(image_path);
    bip::FlatAutomaton fa;
    try {
        fa = bip::load(std::span<const std::uint8_t>(
            reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
    } catch (const bip::VersionMismatch& e) {
        throw UsageError(std::string("cannot load image: ") + e.what());
    } catch (const bip::ChecksumMismatch& e) {
        throw UsageError(std::string("cannot load image: ") + e.what());
    }
    std::ofstream trace_file;
    std::ostream* sink = &std::cout;
    if (!trace_path.empty()) {
        trace_file.open(trace_path, std::ios::binary);
        if (!trace_file) throw UsageError("cannot open trace file '" + trace_path + "'");
        sink = &trace_file;
    }
    bip::InterpretResult result = bip::interpret(fa, seed, steps, sink);
    bip::RunResult rr;
    rr.status = result.status;
    rr.steps_executed = result.steps_executed;
    return run_trace_common(rr, steps);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BIP component-coordination toolkit"};
    app.require_subcommand(1);

    std::string path, trace_path, property, mode = "exact", arch_spec, operands, out_path;
    std::uint64_t seed = 0, steps = 1000, max_states = 0;
    double max_seconds = 0;
    bool deadlock = false;

    auto* check = app.add_subcommand("check", "parse and validate a model");
    check->add_option("path", path)->required();

    auto* simulate = app.add_subcommand("simulate", "run the engine with a seed");
    simulate->add_option("path", path)->required();
    simulate->add_option("--seed", seed);
    simulate->add_option("--steps", steps);
    simulate->add_option("--trace", trace_path, "write trace lines to this file");

    auto* verify = app.add_subcommand("verify", "check deadlock-freedom or a safety property");
    verify->add_option("path", path)->required();
    verify->add_flag("--deadlock", deadlock);
    verify->add_option("--property", property);
    verify->add_option("--mode", mode)->check(CLI::IsMember({"exact", "compositional"}));
    verify->add_option("--max-states", max_states);
    verify->add_option("--max-seconds", max_seconds);

    auto* apply = app.add_subcommand("apply", "apply an architecture to operand components");
    apply->add_option("path", path)->required();
    apply->add_option("--arch", arch_spec, "architecture name, or A+B to compose")->required();
    apply->add_option("--operands", operands, "comma-separated operand type names")->required();
    apply->add_option("--out", out_path);

    auto* flatten = app.add_subcommand("flatten", "compile to a flat automaton image");
    flatten->add_option("path", path)->required();
    flatten->add_option("--out", out_path)->required();
    flatten->add_option("--max-states", max_states);
    flatten->add_option("--max-seconds", max_seconds);

    auto* run_image = app.add_subcommand("run-image", "execute a flat automaton image");
    run_image->add_option("image", path)->required();
    run_image->add_option("--seed", seed);
    run_image->add_option("--steps", steps);
    run_image->add_option("--trace", trace_path, "write trace lines to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (*check) return cmd_check(path);
        if (*simulate) return cmd_simulate(path, seed, steps, trace_path);
        if (*verify) {
            if (deadlock == !property.empty())
                throw UsageError("verify needs exactly one of --deadlock or --property NAME");
            return cmd_verify(path, deadlock, property, mode, max_states, max_seconds);
        }
        if (*apply) return cmd_apply(path, arch_spec, operands, out_path);
        if (*flatten) return cmd_flatten(path, out_path, max_states, max_seconds);
        if (*run_image) return cmd_run_image(path, seed, steps, trace_path);
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const bip::ApplyError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const bip::ResourceLimitError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitResourceLimit;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
