// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "poe/messages.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace poe {

/// What executing one batch changed, in application order.
struct UndoRecord {
    std::vector<std::pair<std::string, std::optional<Bytes>>> prior_values;
    std::vector<RequestId> recorded; // requests first executed by this batch
    bool operator==(const UndoRecord&) const = default;
};

struct ExecutedRequest {
    const SignedTransaction* txn = nullptr;
    const ExecutionRecord* record = nullptr;
};

/// Replicated key-value state plus the table of executed requests. Both are
/// part of the state digest: two replicas agree on state only if they agree
/// on which requests have taken effect.
class Datastore {
  public:
    explicit Datastore(std::size_t result_padding = 0) : result_padding_(result_padding) {}

    /// Executes every request of `batch` not already executed. Returns the
    /// undo information; `out` (if given) receives the freshly executed
    /// requests in batch order.
    UndoRecord execute(const Batch& batch, SeqNum seq, View view, std::vector<ExecutedRequest>* out = nullptr);

    /// Reverts one execute() call. Undo records must be applied newest first.
    void undo(const UndoRecord& undo);

    const ExecutionRecord* find_executed(RequestId id) const;
    std::optional<Bytes> get(const std::string& key) const;

    const std::map<std::string, Bytes>& kv() const { return kv_; }
    std::size_t executed_count() const { return executed_.size(); }

    StateSnapshot snapshot() const;
    void restore(const StateSnapshot& snapshot);
    Digest state_digest() const;

  private:
    Bytes run(const Command& cmd, UndoRecord& undo);

    std::size_t result_padding_;
    std::map<std::string, Bytes> kv_;
    std::map<RequestId, ExecutionRecord> executed_;
};

/// Digest of a snapshot; equals Datastore::state_digest() of the restored store.
Digest snapshot_digest(const StateSnapshot& snapshot);

} // namespace poe
