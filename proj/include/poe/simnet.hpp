// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "poe/adversary.hpp"
#include "poe/client.hpp"
#include "poe/replica.hpp"
#include "poe/rng.hpp"
#include "poe/scenario.hpp"
#include "poe/trace.hpp"

#include <map>
#include <memory>
#include <queue>
#include <set>
#include <string>
#include <vector>

namespace poe {

struct MetricsSample {
    SimTime time = 0;
    std::uint64_t decisions = 0;
    std::uint64_t commits = 0;
    View view = 0;
    std::uint64_t msgs_propose = 0;
    std::uint64_t msgs_support = 0;
    std::uint64_t msgs_certify = 0;
    std::uint64_t msgs_inform = 0;
    std::uint64_t msgs_vc = 0;
};

struct Metrics {
    std::uint64_t submitted = 0;
    std::uint64_t decisions = 0; // seqs that nf replicas view-committed identically
    std::uint64_t commits = 0;   // client commits
    std::uint64_t dropped = 0;
    View max_view = 0;           // highest view any honest replica entered
    SimTime end_time = 0;
    SimTime last_decision_time = 0;
    SimTime last_commit_time = 0;
    std::map<std::string, std::uint64_t> messages; // sends by type
    std::vector<SimTime> latencies;                // per committed request
    std::vector<MetricsSample> samples;
};

std::string metrics_csv(const Metrics& m);

struct ReplicaSummary {
    ReplicaId id = 0;
    bool faulty = false;
    View view = 0;
    std::size_t applied = 0;
    std::size_t stable = 0;
    Digest ledger_head;
    std::string ledger_export;
};

struct RunResult {
    Trace trace;
    Metrics metrics;
    std::vector<ReplicaSummary> replicas;
};

/// Deterministic discrete-event simulation of one scenario. Events are
/// ordered by (time, originating node, per-origin counter), so the seed
/// alone determines the run.
class Simulation {
  public:
    explicit Simulation(Scenario scenario);
    ~Simulation();

    RunResult run();

    const Scenario& scenario() const { return sc_; }
    const Replica& replica(ReplicaId r) const { return *replicas_.at(r); }
    const Client& client(ClientId c) const { return *clients_.at(c); }

  private:
    struct Event {
        enum class Kind : std::uint8_t { Deliver, Timer, Submit } kind;
        SimTime time = 0;
        std::uint32_t origin = 0; // rank of the node that caused it
        std::uint64_t counter = 0;
        NodeId from; // Deliver: claimed sender
        NodeId to;   // Deliver: receiver; Timer/Submit: owner
        std::shared_ptr<const Message> msg;
        std::optional<MacTag> mac;
        TimerId timer = 0;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            return std::tie(a.time, a.origin, a.counter) > std::tie(b.time, b.origin, b.counter);
        }
    };

    std::uint32_t rank(NodeId node) const;
    void schedule(Event e, NodeId origin);
    void dispatch(const Event& e);
    void deliver(const Event& e);
    void apply_effects(NodeId node, Effects& fx);
    void transmit(NodeId from, const Emission& em);
    bool partitioned(NodeId a, NodeId b) const;
    SimTime sample_delay();
    void record(TraceEvent e);
    void record_transition(ReplicaId r, const Transition& t);
    void record_commit(const CommitEvent& c);
    void sample_metrics_until(SimTime t);
    bool done() const;
    Bytes make_payload(ClientId c);

    Scenario sc_;
    std::unique_ptr<Authenticator> auth_;
    Rng net_rng_;
    Rng work_rng_;
    Rng adv_rng_;
    std::unique_ptr<Adversary> adversary_;
    std::vector<std::unique_ptr<Replica>> replicas_;
    std::vector<std::unique_ptr<Client>> clients_;

    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    std::vector<std::uint64_t> counters_;
    SimTime now_ = 0;
    SimTime next_sample_ = 0;

    std::map<std::pair<ClientId, std::uint64_t>, SimTime> submit_times_;
    std::map<std::tuple<View, SeqNum, Digest>, std::set<ReplicaId>> view_commits_;
    std::set<SeqNum> decided_;
    std::optional<SimTime> all_committed_at_;

    Trace trace_;
    Metrics metrics_;
};

/// Convenience wrapper: validates, builds and runs.
RunResult run_scenario(const Scenario& scenario);

} // namespace poe
