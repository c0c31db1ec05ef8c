// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "poe/config.hpp"
#include "poe/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <string>
#include <vector>

namespace poe {

struct DelayModel {
    enum class Kind : std::uint8_t { Fixed, Uniform };
    Kind kind = Kind::Uniform;
    SimTime lo = 1; // fixed delay uses lo
    SimTime hi = 3;

    static DelayModel fixed(SimTime d) { return {Kind::Fixed, d, d}; }
    static DelayModel uniform(SimTime lo, SimTime hi) { return {Kind::Uniform, lo, hi}; }
};

/// During [start, end) replicas in different groups cannot reach each other.
/// Replicas not listed form one extra group together.
struct Partition {
    SimTime start = 0;
    SimTime end = 0;
    std::vector<std::vector<ReplicaId>> groups;
};

enum class AdversaryKind : std::uint8_t {
    None,
    Crash,
    EquivocatingPrimary,
    DarkPrimary,
    SkipSeq,
    DelayLinks,
    ForgeShares,
};

std::string to_string(AdversaryKind kind);
AdversaryKind parse_adversary(const std::string& text);
const std::vector<AdversaryKind>& all_adversaries(); // every program except None

struct AdversarySpec {
    AdversaryKind program = AdversaryKind::None;
    std::vector<ReplicaId> faulty;  // replicas the adversary controls (<= f)
    std::vector<ReplicaId> victims; // dark primary: honest replicas kept in the dark
    SimTime at_time = 0;            // crash time
    SeqNum skip_seq = 0;            // skip-seq: the sequence number never proposed
    double rate = 0.5;              // equivocation / forgery probability per message
    SimTime max_extra_delay = 20;   // delay-links: per-link extra delay bound
};

struct Scenario {
    std::uint32_t n = 4;
    std::uint32_t f = 1;
    Scheme scheme = Scheme::TS;
    std::uint64_t seed = 1;

    std::size_t batch_size = 1;
    std::size_t watermark_window = 250;
    std::size_t checkpoint_interval = 100;
    std::size_t max_in_flight = 250;
    SimTime timeout_base = 10;
    SimTime client_timeout = 30;
    SimTime batch_flush = 1;

    std::uint32_t clients = 1;
    std::uint32_t requests_per_client = 10;
    SimTime submit_interval = 1;
    std::uint32_t key_space = 16;
    double write_ratio = 0.9;
    std::size_t command_padding = 0;
    std::size_t result_padding = 0;

    DelayModel delay;
    double drop_rate = 0.0;
    std::vector<Partition> partitions;
    AdversarySpec adversary;

    SimTime duration = 5000;
    std::optional<std::uint64_t> decision_target;
    bool stop_when_committed = true;
    SimTime drain = 40; // extra time after the last commit before stopping
    SimTime metrics_interval = 10;

    /// Message-delay throughput mode: no authenticator work, no failure
    /// detection or client retransmission.
    bool latency_mode = false;
    bool record_messages = false; // hex-armored encodings in the trace
    bool record_network = true;   // send/deliver/drop/timer events in the trace

    std::uint32_t nf() const { return n - f; }
    ReplicaConfig replica_config(ReplicaId id) const;

    /// Throws ConfigInvalid on any inconsistency.
    void validate() const;
};

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Scenario& s);

/// Parses the scenario file format (JSON object; unknown keys are errors).
Scenario parse_scenario(const std::string& text);
Scenario load_scenario_file(const std::string& path);

} // namespace poe
