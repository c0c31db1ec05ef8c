// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "poe/checker.hpp"
#include "poe/rng.hpp"
#include "poe/scenario.hpp"
#include "poe/simnet.hpp"

#include <functional>
#include <string>
#include <vector>

namespace poe {

enum ExitCode : int { kExitPass = 0, kExitViolation = 1, kExitConfigError = 2 };

struct RunOutcome {
    RunResult result;
    CheckReport report;
    bool all_committed = false;     // every submitted request reached client commit
    bool honest_caught_up = false;  // every non-faulty replica executed every committed seq
};

RunOutcome run_and_check(const Scenario& scenario);

/// trace.jsonl, metrics.csv, report.txt, scenario.json and one
/// ledger-r<i>.txt per replica.
void write_outputs(const std::string& dir, const Scenario& scenario, const RunOutcome& outcome);

/// Typical parameters for a program: which replicas it controls and when.
AdversarySpec default_adversary(AdversaryKind program, const Scenario& base, Rng& rng);

// ---------------------------------------------------------------------------
// Campaign

struct CampaignConfig {
    std::uint64_t first_seed = 1;
    std::uint64_t runs_per_program = 1000;
    std::vector<AdversaryKind> programs = all_adversaries();
    std::vector<Scheme> schemes = {Scheme::TS, Scheme::MAC};
    std::vector<std::uint32_t> sizes = {4, 7, 10};
};

/// The small randomized scenario a campaign runs for (program, n, scheme, seed).
Scenario campaign_scenario(AdversaryKind program, std::uint32_t n, Scheme scheme, std::uint64_t seed);

struct CampaignRow {
    AdversaryKind program = AdversaryKind::None;
    std::uint32_t n = 0;
    Scheme scheme = Scheme::TS;
    std::uint64_t runs = 0;
    std::uint64_t violating_runs = 0;
    std::map<std::string, std::uint64_t> violations;
    std::uint64_t fully_committed_runs = 0;
    std::uint64_t submitted = 0;
    std::uint64_t commits = 0;
    std::uint64_t view_changes = 0;
    std::vector<std::uint64_t> failing_seeds; // first few
    std::vector<std::uint64_t> stalled_seeds; // first few runs that left requests uncommitted
};

struct CampaignSummary {
    std::vector<CampaignRow> rows;
    std::uint64_t runs() const;
    std::uint64_t violations(const std::string& kind = {}) const;
};

/// Each program gets `runs_per_program` consecutive seeds; seed s runs in
/// cell (s mod cells) of the size x scheme grid.
CampaignSummary run_campaign(const CampaignConfig& cfg,
                             const std::function<void(const CampaignRow&)>& progress = {});
std::string campaign_csv(const CampaignSummary& summary);

// ---------------------------------------------------------------------------
// Message-delay throughput

struct LatencyPoint {
    std::uint32_t n = 0;
    SimTime delay = 0;
    std::size_t window = 0;
    std::uint64_t decisions = 0;
    SimTime elapsed = 0; // virtual time of the last decision
    double throughput() const { return elapsed > 0 ? static_cast<double>(decisions) / static_cast<double>(elapsed) : 0; }
};

Scenario latency_scenario(std::uint32_t n, SimTime delay, std::size_t window, std::uint64_t decisions);
LatencyPoint run_latency(std::uint32_t n, SimTime delay, std::size_t window, std::uint64_t decisions);
std::string latency_csv(const std::vector<LatencyPoint>& points);

} // namespace poe
