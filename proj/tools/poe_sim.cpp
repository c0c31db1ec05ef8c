// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

// poe-sim: run scenarios, safety campaigns and the message-delay benchmark.

#include "poe/harness.hpp"
#include "poe/ledger.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace poe;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigInvalid("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& dir, const std::string& name, const std::string& text) {
    std::filesystem::create_directories(dir);
    std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
    if (!out) throw ConfigInvalid("cannot write into " + dir);
    out << text;
}

struct RunArgs {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> scheme;
    std::optional<std::string> adversary;
    std::optional<std::size_t> window;
    std::string out;
};

int cmd_run(const RunArgs& a) {
    Scenario s = a.scenario.empty() ? Scenario{} : load_scenario_file(a.scenario);
    if (a.seed) s.seed = *a.seed;
    if (a.scheme) s.scheme = parse_scheme(*a.scheme);
    if (a.window) s.max_in_flight = *a.window;
    if (a.adversary) {
        Rng rng(s.seed, 0xad);
        s.adversary = default_adversary(parse_adversary(*a.adversary), s, rng);
    }
    s.validate();
    RunOutcome out = run_and_check(s);
    if (!a.out.empty()) write_outputs(a.out, s, out);

    const Metrics& m = out.result.metrics;
    fmt::print("seed={} n={} f={} scheme={} adversary={}\n", s.seed, s.n, s.f, to_string(s.scheme),
               to_string(s.adversary.program));
    fmt::print("submitted={} commits={} decisions={} max_view={} end_time={}\n", m.submitted, m.commits, m.decisions,
               m.max_view, m.end_time);
    for (const auto& v : out.report.violations) fmt::print("VIOLATION {} @{}: {}\n", v.kind, v.event, v.detail);
    fmt::print("{}\n", out.report.ok() ? "PASS" : "FAIL");
    return out.report.ok() ? kExitPass : kExitViolation;
}

struct CampaignArgs {
    std::uint64_t seed = 1;
    std::uint64_t runs = 1000;
    std::vector<std::string> adversaries;
    std::optional<std::string> scheme;
    std::vector<std::uint32_t> sizes = {4, 7, 10};
    std::string out;
};

int cmd_campaign(const CampaignArgs& a) {
    CampaignConfig cfg;
    cfg.first_seed = a.seed;
    cfg.runs_per_program = a.runs;
    cfg.sizes = a.sizes;
    if (!a.adversaries.empty()) {
        cfg.programs.clear();
        for (const auto& name : a.adversaries) cfg.programs.push_back(parse_adversary(name));
    }
    if (a.scheme) cfg.schemes = {parse_scheme(*a.scheme)};
    CampaignSummary summary = run_campaign(cfg, [](const CampaignRow& r) {
        std::uint64_t v = 0;
        for (const auto& [kind, count] : r.violations) v += count;
        std::cerr << fmt::format("{:<21} n={:<3} {:<3} runs={:<4} violations={} committed_all={}\n",
                                 to_string(r.program), r.n, to_string(r.scheme), r.runs, v, r.fully_committed_runs);
    });
    std::string csv = campaign_csv(summary);
    if (a.out.empty()) {
        std::cout << csv;
    } else {
        write_text(a.out, "campaign.csv", csv);
        // Failing and stalled runs are replayed in full so they can be inspected.
        auto replay = [&](const CampaignRow& row, std::uint64_t seed, const char* label) {
            Scenario s = campaign_scenario(row.program, row.n, row.scheme, seed);
            s.record_network = true;
            auto dir = std::filesystem::path(a.out) / fmt::format("{}-{}-{}", label, to_string(row.program), seed);
            write_outputs(dir.string(), s, run_and_check(s));
        };
        for (const auto& row : summary.rows) {
            for (auto seed : row.failing_seeds) replay(row, seed, "fail");
            for (auto seed : row.stalled_seeds) replay(row, seed, "stall");
        }
    }
    std::uint64_t violations = summary.violations();
    fmt::print("campaign: {} runs, {} violations\n", summary.runs(), violations);
    return violations == 0 ? kExitPass : kExitViolation;
}

struct BenchArgs {
    std::vector<SimTime> delays = {1, 2};
    std::vector<std::size_t> windows = {1, 250};
    std::vector<std::uint32_t> sizes = {4};
    std::uint64_t decisions = 500;
    std::string out;
};

int cmd_latency_bench(const BenchArgs& a) {
    std::vector<LatencyPoint> points;
    for (auto n : a.sizes) {
        for (auto d : a.delays) {
            for (auto w : a.windows) points.push_back(run_latency(n, d, w, a.decisions));
        }
    }
    std::string csv = latency_csv(points);
    if (a.out.empty()) {
        std::cout << csv;
    } else {
        write_text(a.out, "latency.csv", csv);
    }
    return kExitPass;
}

int cmd_check(const std::string& path) {
    Trace trace = read_trace_file(path);
    CheckReport report = check_trace(trace);
    for (const auto& v : report.violations) fmt::print("VIOLATION {} @{}: {}\n", v.kind, v.event, v.detail);
    fmt::print("{} events, {}\n", trace.events.size(), report.summary());
    return report.ok() ? kExitPass : kExitViolation;
}

int cmd_ledger_diff(const std::string& left, const std::string& right) {
    auto a = parse_ledger_export(read_file(left));
    auto b = parse_ledger_export(read_file(right));
    LedgerDiff d = diff_ledgers(a, b);
    fmt::print("left={} right={} common_prefix={}\n", d.left_size, d.right_size, d.common_prefix);
    if (d.diverged) {
        fmt::print("DIVERGED at seq {}\n", d.first_mismatch.value_or(d.common_prefix));
        return kExitViolation;
    }
    fmt::print("{}\n", d.left_size == d.right_size ? "identical" : "one is a prefix of the other");
    return kExitPass;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic simulator for the PoE replication protocol"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run one scenario and check its trace");
    run_cmd->add_option("--scenario", run.scenario, "Scenario file (JSON)");
    run_cmd->add_option("--seed", run.seed, "Override the scenario seed");
    run_cmd->add_option("--scheme", run.scheme, "ts or mac");
    run_cmd->add_option("--adversary", run.adversary, "Adversary program with default parameters");
    run_cmd->add_option("--window", run.window, "Out-of-order window (max proposals in flight)");
    run_cmd->add_option("--out", run.out, "Output directory for trace, metrics and ledgers");

    CampaignArgs campaign;
    auto* campaign_cmd = app.add_subcommand("campaign", "Seeded safety campaign over the adversary suite");
    campaign_cmd->add_option("--seed", campaign.seed, "First seed");
    campaign_cmd->add_option("--runs", campaign.runs, "Runs per adversary program");
    campaign_cmd->add_option("--adversary", campaign.adversaries, "Restrict to these programs");
    campaign_cmd->add_option("--scheme", campaign.scheme, "Restrict to ts or mac");
    campaign_cmd->add_option("--n", campaign.sizes, "Replica counts")->delimiter(',');
    campaign_cmd->add_option("--out", campaign.out, "Output directory for campaign.csv");

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("latency-bench", "Decisions per virtual time under fixed message delay");
    bench_cmd->add_option("--delays", bench.delays, "Message delays")->delimiter(',');
    bench_cmd->add_option("--window", bench.windows, "Out-of-order windows")->delimiter(',');
    bench_cmd->add_option("--n", bench.sizes, "Replica counts")->delimiter(',');
    bench_cmd->add_option("--decisions", bench.decisions, "Decisions per run");
    bench_cmd->add_option("--out", bench.out, "Output directory for latency.csv");

    std::string trace_path;
    auto* check_cmd = app.add_subcommand("check", "Re-check a stored trace");
    check_cmd->add_option("trace", trace_path, "trace.jsonl")->required();

    std::string left, right;
    auto* diff_cmd = app.add_subcommand("ledger-diff", "Compare two exported ledgers");
    diff_cmd->add_option("left", left)->required();
    diff_cmd->add_option("right", right)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfigError;
    }

    try {
        if (*run_cmd) return cmd_run(run);
        if (*campaign_cmd) return cmd_campaign(campaign);
        if (*bench_cmd) return cmd_latency_bench(bench);
        if (*check_cmd) return cmd_check(trace_path);
        if (*diff_cmd) return cmd_ledger_diff(left, right);
    } catch (const ConfigInvalid& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
    return kExitConfigError;
}
