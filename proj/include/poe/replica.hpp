// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "poe/config.hpp"
#include "poe/crypto.hpp"
#include "poe/datastore.hpp"
#include "poe/ledger.hpp"
#include "poe/messages.hpp"

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string_view>
#include <vector>

namespace poe {

using TimerId = std::uint64_t;

struct EntryRef {
    SeqNum seq = 0;
    View view = 0;
    Digest digest;
    bool operator==(const EntryRef&) const = default;
};

/// Ground-truth state change reported by a replica, recorded in the trace
/// and consumed by the invariant checker.
struct Transition {
    enum class Kind : std::uint8_t {
        ViewCommit,       // view, seq, digest
        Execute,          // view, seq, digest, aux = block hash, txns
        Rollback,         // seq = applied count after rollback, entries = undone (newest first)
        EnterView,        // view, seq = first seq of E', entries = E'
        StableCheckpoint, // seq, digest = state digest, aux = ledger digest
        Install,          // seq, digest = state digest, aux = ledger digest, entries = installed chain
        VcRequest,        // view = abandoned view, seq = history end
        NvPropose,        // view = new view
    };

    Kind kind = Kind::ViewCommit;
    View view = 0;
    SeqNum seq = 0;
    Digest digest;
    Digest aux;
    std::vector<Digest> txns;
    std::vector<EntryRef> entries;
};

std::string_view to_string(Transition::Kind kind);

struct Outgoing {
    NodeId to;
    std::shared_ptr<const Message> msg;
};

struct TimerRequest {
    TimerId id = 0;
    SimTime delay = 0;
};

/// Everything a handler wants done: messages to send, timers to arm, and
/// state transitions to report.
struct Effects {
    std::vector<Outgoing> sends;
    std::vector<TimerRequest> timers;
    std::vector<Transition> transitions;

    void send(NodeId to, Message msg) { sends.push_back({to, std::make_shared<const Message>(std::move(msg))}); }
    void send(NodeId to, std::shared_ptr<const Message> msg) { sends.push_back({to, std::move(msg)}); }
    void clear() {
        sends.clear();
        timers.clear();
        transitions.clear();
    }
};

enum class EntryStatus : std::uint8_t { Proposed, Supported, ViewCommitted, Executed };

struct LogEntry {
    SeqNum seq = 0;
    View view = 0;
    std::optional<Batch> batch;
    EntryStatus status = EntryStatus::Proposed;
    Digest certify_digest; // h = hash(seq || view || batch digest)
    std::optional<CertifyProof> certify;
    std::map<ReplicaId, SignatureShare> shares; // TS: primary only; MAC: everyone
    std::optional<UndoRecord> undo;
    bool certify_sent = false;
};

enum class Phase : std::uint8_t { Active, Collecting, AwaitingNewView };

std::string_view to_string(Phase phase);

/// One PoE replica: a sequential state machine driven by messages and
/// timers. Handlers never block; all output goes to the Effects argument.
class Replica {
  public:
    Replica(ReplicaConfig cfg, const Authenticator& auth);

    void on_message(NodeId from, const Message& msg, Effects& fx);
    void on_timer(TimerId id, Effects& fx);

    /// Reverts executions so that entries 0..to_seq remain executed.
    void rollback(SeqNum to_seq, Effects& fx) { rollback_to_count(to_seq + 1, fx); }
    void rollback_to_count(std::size_t count, Effects& fx);

    /// Starts a view change away from the current view (failure detected
    /// locally). No-op if this replica already abandoned the current view.
    void detect_failure(Effects& fx);

    /// The vc-request this replica would send for `view` right now.
    VcRequestMsg make_vc_request(View view) const;

    const ReplicaConfig& config() const { return cfg_; }
    ReplicaId id() const { return cfg_.id; }
    View view() const { return view_; }
    View entered_view() const { return entered_view_; }
    Phase phase() const { return phase_; }
    bool is_primary() const { return phase_ == Phase::Active && cfg_.primary_of(view_) == cfg_.id; }
    std::size_t applied_count() const { return applied_count_; }
    std::size_t stable_count() const { return stable_count_; }
    SeqNum next_seq() const { return next_seq_; }
    unsigned failed_view_changes() const { return failed_vcs_; }
    bool awaiting_state() const { return awaiting_state_.has_value(); }

    const Datastore& store() const { return store_; }
    const Ledger& ledger() const { return ledger_; }
    const LogEntry* entry(SeqNum seq) const;
    const std::map<SeqNum, LogEntry>& log() const { return log_; }
    const std::optional<CheckpointCertificate>& stable_certificate() const { return stable_cert_; }

    /// Requests a backup forwarded or received and still waits to see executed.
    std::size_t pending_requests() const { return pending_.size(); }

  private:
    struct TimerInfo {
        enum class Kind : std::uint8_t { BatchFlush, Request, ViewChange, StateTransfer } kind;
        RequestId request;
    };

    // Normal case (replica_core.cpp).
    void on_request(NodeId from, const SignedTransaction& txn, Effects& fx);
    void on_propose(ReplicaId from, const ProposeMsg& m, Effects& fx);
    void on_support(ReplicaId from, const SupportMsg& m, Effects& fx);
    void on_certify(ReplicaId from, const CertifyMsg& m, Effects& fx);
    void enqueue_request(const SignedTransaction& txn, Effects& fx);
    void try_propose(Effects& fx, bool flush);
    void propose(std::vector<SignedTransaction> requests, Effects& fx);
    void record_share(LogEntry& e, const SignatureShare& share, Effects& fx);
    void check_quorum(LogEntry& e, Effects& fx);
    void view_commit(LogEntry& e, CertifyProof proof, Effects& fx);
    void apply_early(LogEntry& e, Effects& fx);
    void try_execute(Effects& fx);
    void send_inform(ClientId client, const ExecutionRecord& rec, Effects& fx);
    void arm_request_timer(RequestId id, Effects& fx);
    void forward_to_primary(const SignedTransaction& txn, Effects& fx);
    void resend_slot(SeqNum k, Effects& fx);
    bool peer_left_view() const;
    bool accepts_normal_case(View v) const;
    void buffer_future(NodeId from, const Message& msg);
    void replay_future(Effects& fx);
    void broadcast(const Message& msg, bool include_self, Effects& fx);
    void leave_view();

    // View change (view_change.cpp).
    void on_vc_request(ReplicaId from, const VcRequestMsg& m, Effects& fx);
    void on_nv_propose(ReplicaId from, const NvProposeMsg& m, Effects& fx);
    void send_vc_request(View abandon, Effects& fx);
    void maybe_join(Effects& fx);
    void maybe_propose_new_view(Effects& fx);
    void adopt_new_view(const NvProposeMsg& m, Effects& fx);
    void on_view_change_timeout(Effects& fx);
    SimTime current_timeout() const;

    // Checkpoints and state transfer (checkpointing.cpp).
    void emit_checkpoint(Effects& fx);
    void on_checkpoint(ReplicaId from, const CheckpointMsg& m, Effects& fx);
    void adopt_certificate(const CheckpointCertificate& cert, Effects& fx);
    void make_stable(const CheckpointCertificate& cert, Effects& fx);
    void request_state(const CheckpointCertificate& cert, Effects& fx);
    void on_state_request(ReplicaId from, const StateRequestMsg& m, Effects& fx);
    void on_state_reply(ReplicaId from, const StateReplyMsg& m, Effects& fx);
    void garbage_collect();

    TimerId arm(TimerInfo info, SimTime delay, Effects& fx);
    void cancel(std::optional<TimerId>& timer);

    ReplicaConfig cfg_;
    const Authenticator& auth_;
    Datastore store_;
    Ledger ledger_;

    View view_ = 0;
    View entered_view_ = 0;
    Phase phase_ = Phase::Active;
    SeqNum view_start_ = 0; // proposals in view_ must have seq >= view_start_

    std::map<SeqNum, LogEntry> log_;
    std::size_t applied_count_ = 0;

    // Early normal-case messages for (view, seq) whose proposal is not yet known.
    struct Early {
        std::map<ReplicaId, SignatureShare> shares;
        std::optional<CertifyMsg> certify;
    };
    std::map<std::pair<View, SeqNum>, Early> early_;
    std::vector<std::pair<NodeId, Message>> future_;

    // Primary.
    SeqNum next_seq_ = 0;
    std::deque<SignedTransaction> queue_;
    std::set<RequestId> queued_;
    std::set<RequestId> in_flight_;
    std::optional<TimerId> flush_timer_;

    // Requests this replica waits to see executed.
    struct Pending {
        SignedTransaction txn;
        std::optional<TimerId> timer;
    };
    std::map<RequestId, Pending> pending_;

    // View change.
    std::map<View, std::map<ReplicaId, VcRequestMsg>> vc_requests_;
    std::optional<View> vc_sent_; // highest view this replica abandoned
    std::optional<View> nv_sent_;
    std::optional<TimerId> vc_timer_;
    unsigned failed_vcs_ = 0;

    // Checkpoints.
    std::size_t stable_count_ = 0;
    std::optional<CheckpointCertificate> stable_cert_;
    std::optional<StateSnapshot> stable_snapshot_;
    std::map<SeqNum, StateSnapshot> own_snapshots_;
    std::map<SeqNum, std::map<ReplicaId, CheckpointMsg>> checkpoint_votes_;
    std::optional<CheckpointCertificate> pending_cert_;
    std::optional<CheckpointCertificate> awaiting_state_;
    std::optional<TimerId> state_timer_;

    std::map<TimerId, TimerInfo> timers_;
    TimerId next_timer_ = 1;
    bool executing_ = false;
    bool execute_again_ = false;
};

} // namespace poe
