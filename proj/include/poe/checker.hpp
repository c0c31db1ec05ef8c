// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "poe/trace.hpp"

#include <map>
#include <string>
#include <vector>

namespace poe {

struct Violation {
    std::string kind;
    std::uint64_t event = 0; // trace index where it became visible
    std::string detail;
};

struct CheckReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    std::map<std::string, std::size_t> counts() const;
    std::string summary() const;
};

/// Safety invariants over the ground-truth transitions of the non-faulty
/// replicas and the client commits recorded in a trace:
///   quorum_uniqueness       one batch view-committed per (view, seq)
///   rollback_committed      no client-committed entry is ever undone
///   new_view_missing_commit every new view keeps every client-committed entry
///   ledger_divergence       executed prefixes agree with client commits
///   checkpoint_divergence   stable checkpoints agree per seq
///   execution_gap           execution is strictly in seq order
///   commit_uniqueness       one batch committed per seq, one outcome per request
///   commit_validity         a commit is backed by nf - f non-faulty executions
///   view_regression         views entered strictly increase per replica
///   time_regression         virtual time never decreases
CheckReport check_trace(const Trace& trace);

} // namespace poe
