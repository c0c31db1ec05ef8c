// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "poe/harness.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>

namespace poe {

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigInvalid("cannot write " + path.string());
    out << text;
}

std::vector<ReplicaId> pick_faulty(const Scenario& base, Rng& rng, bool include_primary) {
    std::uint32_t count = 1 + static_cast<std::uint32_t>(rng.index(base.f));
    std::vector<ReplicaId> pool;
    for (ReplicaId r = include_primary ? 1 : 0; r < base.n; ++r) pool.push_back(r);
    std::vector<ReplicaId> faulty;
    if (include_primary) faulty.push_back(0);
    while (faulty.size() < count) {
        std::size_t i = rng.index(pool.size());
        faulty.push_back(pool[i]);
        pool.erase(pool.begin() + static_cast<long>(i));
    }
    std::sort(faulty.begin(), faulty.end());
    return faulty;
}

} // namespace

RunOutcome run_and_check(const Scenario& scenario) {
    RunOutcome out;
    out.result = run_scenario(scenario);
    out.report = check_trace(out.result.trace);
    const Metrics& m = out.result.metrics;
    out.all_committed = m.commits == std::uint64_t{scenario.clients} * scenario.requests_per_client;

    std::optional<SeqNum> highest;
    for (const auto& e : out.result.trace.events) {
        if (e.commit) highest = std::max(highest.value_or(0), e.commit->seq);
    }
    out.honest_caught_up = std::all_of(out.result.replicas.begin(), out.result.replicas.end(), [&](const auto& r) {
        return r.faulty || !highest || r.applied > *highest;
    });
    return out;
}

void write_outputs(const std::string& dir, const Scenario& scenario, const RunOutcome& outcome) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    fs::path base(dir);
    write_file(base / "trace.jsonl", trace_to_string(outcome.result.trace));
    write_file(base / "metrics.csv", metrics_csv(outcome.result.metrics));
    write_file(base / "scenario.json", to_json(scenario).dump(2) + "\n");
    std::string report;
    for (const auto& v : outcome.report.violations) report += fmt::format("{} @{}: {}\n", v.kind, v.event, v.detail);
    if (report.empty()) report = "no violations\n";
    write_file(base / "report.txt", report);
    for (const auto& r : outcome.result.replicas) {
        write_file(base / fmt::format("ledger-r{}.txt", r.id), r.ledger_export);
    }
}

AdversarySpec default_adversary(AdversaryKind program, const Scenario& base, Rng& rng) {
    AdversarySpec a;
    a.program = program;
    switch (program) {
    case AdversaryKind::None: break;
    case AdversaryKind::Crash:
        a.faulty = pick_faulty(base, rng, rng.chance(0.7));
        a.at_time = rng.uniform(0, 80);
        break;
    case AdversaryKind::EquivocatingPrimary:
        a.faulty = pick_faulty(base, rng, true);
        a.rate = 0.6;
        break;
    case AdversaryKind::DarkPrimary: a.faulty = pick_faulty(base, rng, true); break;
    case AdversaryKind::SkipSeq:
        a.faulty = pick_faulty(base, rng, true);
        a.skip_seq = static_cast<SeqNum>(rng.uniform(0, 6));
        break;
    case AdversaryKind::DelayLinks: a.max_extra_delay = 20; break;
    case AdversaryKind::ForgeShares:
        a.faulty = pick_faulty(base, rng, rng.chance(0.5));
        a.rate = 0.3;
        break;
    }
    return a;
}

// ---------------------------------------------------------------------------
// Campaign

Scenario campaign_scenario(AdversaryKind program, std::uint32_t n, Scheme scheme, std::uint64_t seed) {
    Rng rng(seed, 0xca);
    Scenario s;
    s.n = n;
    s.f = (n - 1) / 3;
    s.scheme = scheme;
    s.seed = seed;
    s.batch_size = static_cast<std::size_t>(rng.uniform(1, 3));
    s.checkpoint_interval = 4;
    s.watermark_window = 16;
    s.max_in_flight = static_cast<std::size_t>(rng.uniform(1, 8));
    s.timeout_base = 12;
    s.client_timeout = 40;
    s.clients = static_cast<std::uint32_t>(rng.uniform(1, 3));
    s.requests_per_client = static_cast<std::uint32_t>(rng.uniform(4, 10));
    s.submit_interval = rng.uniform(1, 6);
    s.key_space = 8;
    s.delay = DelayModel::uniform(1, rng.uniform(1, 4));
    if (rng.chance(0.3)) s.drop_rate = 0.02;
    if (rng.chance(0.2)) {
        Partition p;
        p.start = rng.uniform(0, 60);
        p.end = p.start + rng.uniform(10, 60);
        p.groups = {{static_cast<ReplicaId>(rng.index(n))}};
        s.partitions.push_back(p);
    }
    s.adversary = default_adversary(program, s, rng);
    s.duration = 6000;
    s.drain = 80;
    s.record_network = false;
    return s;
}

std::uint64_t CampaignSummary::runs() const {
    std::uint64_t total = 0;
    for (const auto& r : rows) total += r.runs;
    return total;
}

std::uint64_t CampaignSummary::violations(const std::string& kind) const {
    std::uint64_t total = 0;
    for (const auto& r : rows) {
        for (const auto& [k, count] : r.violations) {
            if (kind.empty() || k == kind) total += count;
        }
    }
    return total;
}

CampaignSummary run_campaign(const CampaignConfig& cfg, const std::function<void(const CampaignRow&)>& progress) {
    struct Cell {
        std::uint32_t n;
        Scheme scheme;
    };
    std::vector<Cell> cells;
    for (auto n : cfg.sizes) {
        for (auto scheme : cfg.schemes) cells.push_back({n, scheme});
    }
    if (cells.empty()) throw ConfigInvalid("campaign needs at least one size and scheme");

    CampaignSummary summary;
    for (AdversaryKind program : cfg.programs) {
        std::vector<CampaignRow> rows(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            rows[c].program = program;
            rows[c].n = cells[c].n;
            rows[c].scheme = cells[c].scheme;
        }
        for (std::uint64_t i = 0; i < cfg.runs_per_program; ++i) {
            std::uint64_t seed = cfg.first_seed + i;
            std::size_t c = seed % cells.size();
            CampaignRow& row = rows[c];
            Scenario s = campaign_scenario(program, cells[c].n, cells[c].scheme, seed);
            RunOutcome out = run_and_check(s);
            ++row.runs;
            row.submitted += out.result.metrics.submitted;
            row.commits += out.result.metrics.commits;
            row.view_changes += out.result.metrics.max_view;
            if (out.all_committed) {
                ++row.fully_committed_runs;
            } else if (row.stalled_seeds.size() < 5) {
                row.stalled_seeds.push_back(seed);
            }
            if (!out.report.ok()) {
                ++row.violating_runs;
                for (const auto& [kind, count] : out.report.counts()) row.violations[kind] += count;
                if (row.failing_seeds.size() < 5) row.failing_seeds.push_back(seed);
            }
        }
        for (auto& row : rows) {
            if (progress) progress(row);
            summary.rows.push_back(std::move(row));
        }
    }
    return summary;
}

std::string campaign_csv(const CampaignSummary& summary) {
    std::string out = "program,n,scheme,runs,violating_runs,violations,fully_committed_runs,submitted,commits,"
                      "view_changes,failing_seeds,stalled_seeds\n";
    for (const auto& r : summary.rows) {
        std::uint64_t violations = 0;
        for (const auto& [kind, count] : r.violations) violations += count;
        auto join = [](const std::vector<std::uint64_t>& seeds) {
            std::string text;
            for (auto s : seeds) text += fmt::format("{}{}", text.empty() ? "" : " ", s);
            return text;
        };
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", to_string(r.program), r.n, to_string(r.scheme),
                           r.runs, r.violating_runs, violations, r.fully_committed_runs, r.submitted, r.commits,
                           r.view_changes, join(r.failing_seeds), join(r.stalled_seeds));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Message-delay throughput

Scenario latency_scenario(std::uint32_t n, SimTime delay, std::size_t window, std::uint64_t decisions) {
    Scenario s;
    s.n = n;
    s.f = 0;
    s.scheme = Scheme::TS;
    s.seed = 1;
    s.latency_mode = true;
    s.batch_size = 1;
    s.max_in_flight = window;
    s.watermark_window = static_cast<std::size_t>(decisions) + window;
    s.checkpoint_interval = std::size_t{1} << 40;
    s.clients = 1;
    s.requests_per_client = static_cast<std::uint32_t>(decisions);
    s.submit_interval = 0;
    s.delay = DelayModel::fixed(delay);
    s.decision_target = decisions;
    s.stop_when_committed = false;
    s.duration = SimTime{1} << 50;
    s.metrics_interval = std::max<SimTime>(1, delay * 10);
    s.record_network = false;
    return s;
}

LatencyPoint run_latency(std::uint32_t n, SimTime delay, std::size_t window, std::uint64_t decisions) {
    RunResult r = run_scenario(latency_scenario(n, delay, window, decisions));
    LatencyPoint p;
    p.n = n;
    p.delay = delay;
    p.window = window;
    p.decisions = r.metrics.decisions;
    p.elapsed = r.metrics.last_decision_time;
    return p;
}

std::string latency_csv(const std::vector<LatencyPoint>& points) {
    std::string out = "n,delay,window,decisions,elapsed,decisions_per_time\n";
    for (const auto& p : points) {
        out += fmt::format("{},{},{},{},{},{:.6f}\n", p.n, p.delay, p.window, p.decisions, p.elapsed, p.throughput());
    }
    return out;
}

} // namespace poe
