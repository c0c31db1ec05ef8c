// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "poe/client.hpp"
#include "poe/replica.hpp"
#include "poe/types.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace poe {

struct TraceHeader {
    std::uint32_t n = 0;
    std::uint32_t f = 0;
    Scheme scheme = Scheme::TS;
    std::uint64_t seed = 0;
    std::vector<ReplicaId> faulty;
    std::uint32_t clients = 0;
    bool operator==(const TraceHeader&) const = default;
};

struct TraceEvent {
    enum class Kind : std::uint8_t { Send, Deliver, Drop, TimerFire, Transition, Commit };

    std::uint64_t index = 0;
    SimTime time = 0;
    Kind kind = Kind::Send;
    NodeId node;                    // sender (Send), receiver (Deliver/Drop), owner (others)
    std::optional<NodeId> peer;     // the other end of a message
    std::string msg_type;           // message events
    std::string reason;             // Drop
    std::optional<std::string> hex; // canonical message encoding, when recorded
    std::optional<TimerId> timer;
    std::optional<Transition> transition;
    std::optional<CommitEvent> commit;
};

std::string_view to_string(TraceEvent::Kind kind);

struct Trace {
    TraceHeader header;
    std::vector<TraceEvent> events;
};

/// Line-delimited JSON: the header object first, then one object per event.
/// Keys are sorted, so equal traces serialize to identical bytes.
void write_trace(std::ostream& out, const Trace& trace);
std::string trace_to_string(const Trace& trace);

/// Throws MalformedMessage on any syntax or schema error.
Trace parse_trace(std::istream& in);
Trace read_trace_file(const std::string& path);

} // namespace poe
