// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "poe/datastore.hpp"

#include "poe/codec.hpp"

#include <algorithm>

namespace poe {

namespace {

const Bytes kOk = {'O', 'K'};

} // namespace

Bytes Datastore::run(const Command& cmd, UndoRecord& undo) {
    Bytes result;
    if (cmd.op == OpKind::Put) {
        auto it = kv_.find(cmd.key);
        undo.prior_values.emplace_back(cmd.key, it == kv_.end() ? std::nullopt : std::optional<Bytes>(it->second));
        kv_[cmd.key] = cmd.value;
        result = kOk;
    } else {
        auto it = kv_.find(cmd.key);
        // A leading byte distinguishes "absent" from "present but empty".
        if (it == kv_.end()) {
            result.push_back(0);
        } else {
            result = it->second;
            result.insert(result.begin(), 1);
        }
    }
    result.resize(result.size() + result_padding_, 0);
    return result;
}

UndoRecord Datastore::execute(const Batch& batch, SeqNum seq, View view, std::vector<ExecutedRequest>* out) {
    UndoRecord undo;
    for (const auto& txn : batch.requests) {
        RequestId id = txn.id();
        if (executed_.contains(id)) continue;
        Bytes result;
        try {
            result = run(Command::decode(txn.payload), undo);
        } catch (const MalformedMessage&) {
            // Undecodable payloads still execute (as no-ops) so every replica
            // produces the same result.
            result = {'E', 'R', 'R'};
        }
        ExecutionRecord rec{seq, view, txn.digest(), batch.digest, std::move(result)};
        auto [it, inserted] = executed_.emplace(id, std::move(rec));
        undo.recorded.push_back(id);
        if (out) out->push_back({&txn, &it->second});
    }
    return undo;
}

void Datastore::undo(const UndoRecord& undo) {
    for (auto it = undo.prior_values.rbegin(); it != undo.prior_values.rend(); ++it) {
        if (it->second) {
            kv_[it->first] = *it->second;
        } else {
            kv_.erase(it->first);
        }
    }
    for (const auto& id : undo.recorded) executed_.erase(id);
}

const ExecutionRecord* Datastore::find_executed(RequestId id) const {
    auto it = executed_.find(id);
    return it == executed_.end() ? nullptr : &it->second;
}

std::optional<Bytes> Datastore::get(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    return it->second;
}

StateSnapshot Datastore::snapshot() const {
    StateSnapshot s;
    s.kv.assign(kv_.begin(), kv_.end());
    s.executed.assign(executed_.begin(), executed_.end());
    return s;
}

void Datastore::restore(const StateSnapshot& snapshot) {
    kv_ = {snapshot.kv.begin(), snapshot.kv.end()};
    executed_ = {snapshot.executed.begin(), snapshot.executed.end()};
}

Digest Datastore::state_digest() const { return snapshot_digest(snapshot()); }

Digest snapshot_digest(const StateSnapshot& snapshot) {
    // Re-sort so that the digest does not depend on how the snapshot was built.
    auto kv = snapshot.kv;
    std::sort(kv.begin(), kv.end());
    auto executed = snapshot.executed;
    std::sort(executed.begin(), executed.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    Hasher h;
    h.update("poe/state");
    h.update_u64(kv.size());
    for (const auto& [key, value] : kv) {
        h.update_u64(key.size()).update(key);
        h.update_u64(value.size()).update(value);
    }
    h.update_u64(executed.size());
    for (const auto& [id, rec] : executed) {
        h.update_u64(id.client).update_u64(id.nonce).update_u64(rec.seq).update_u64(rec.view);
        h.update(rec.txn_digest).update(rec.batch_digest);
        h.update_u64(rec.result.size()).update(rec.result);
    }
    return h.finish();
}

} // namespace poe
