// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

// Normal-case operation: propose, support, certify, view-commit, speculative
// in-order execution and rollback.

#include "poe/checkpoint.hpp"
#include "poe/replica.hpp"
#include "poe/view_change.hpp"

#include <algorithm>

namespace poe {

namespace {

// Bound on buffered future-view / beyond-watermark messages.
constexpr std::size_t kMaxFuture = 8192;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

} // namespace

std::string_view to_string(Transition::Kind kind) {
    switch (kind) {
    case Transition::Kind::ViewCommit: return "view_commit";
    case Transition::Kind::Execute: return "execute";
    case Transition::Kind::Rollback: return "rollback";
    case Transition::Kind::EnterView: return "enter_view";
    case Transition::Kind::StableCheckpoint: return "stable_checkpoint";
    case Transition::Kind::Install: return "install";
    case Transition::Kind::VcRequest: return "vc_request";
    case Transition::Kind::NvPropose: return "nv_propose";
    }
    return "unknown";
}

std::string_view to_string(Phase phase) {
    switch (phase) {
    case Phase::Active: return "active";
    case Phase::Collecting: return "collecting";
    case Phase::AwaitingNewView: return "awaiting_new_view";
    }
    return "unknown";
}

Replica::Replica(ReplicaConfig cfg, const Authenticator& auth)
    : cfg_(cfg), auth_(auth), store_(cfg.result_padding), ledger_(&auth, cfg.primary_of(0)) {
    cfg_.validate();
}

const LogEntry* Replica::entry(SeqNum seq) const {
    auto it = log_.find(seq);
    return it == log_.end() ? nullptr : &it->second;
}

void Replica::on_message(NodeId from, const Message& msg, Effects& fx) {
    if (from.is_client()) {
        if (const auto* req = std::get_if<RequestMsg>(&msg)) on_request(from, req->txn, fx);
        return;
    }
    if (from.index >= cfg_.n) return;
    ReplicaId src = from.index;
    std::visit(Overloaded{
                   [&](const RequestMsg& m) { on_request(from, m.txn, fx); },
                   [&](const ProposeMsg& m) { on_propose(src, m, fx); },
                   [&](const SupportMsg& m) { on_support(src, m, fx); },
                   [&](const CertifyMsg& m) { on_certify(src, m, fx); },
                   [&](const InformMsg&) {},
                   [&](const VcRequestMsg& m) { on_vc_request(src, m, fx); },
                   [&](const NvProposeMsg& m) { on_nv_propose(src, m, fx); },
                   [&](const CheckpointMsg& m) { on_checkpoint(src, m, fx); },
                   [&](const StateRequestMsg& m) { on_state_request(src, m, fx); },
                   [&](const StateReplyMsg& m) { on_state_reply(src, m, fx); },
               },
               msg);
}

void Replica::on_timer(TimerId id, Effects& fx) {
    auto it = timers_.find(id);
    if (it == timers_.end()) return; // cancelled
    TimerInfo info = it->second;
    timers_.erase(it);
    switch (info.kind) {
    case TimerInfo::Kind::BatchFlush:
        flush_timer_.reset();
        if (is_primary()) try_propose(fx, true);
        break;
    case TimerInfo::Kind::Request: {
        auto p = pending_.find(info.request);
        if (p != pending_.end()) p->second.timer.reset();
        if (phase_ == Phase::Active && !store_.find_executed(info.request)) detect_failure(fx);
        break;
    }
    case TimerInfo::Kind::ViewChange:
        vc_timer_.reset();
        on_view_change_timeout(fx);
        break;
    case TimerInfo::Kind::StateTransfer:
        state_timer_.reset();
        if (awaiting_state_) request_state(*awaiting_state_, fx);
        break;
    }
}

TimerId Replica::arm(TimerInfo info, SimTime delay, Effects& fx) {
    TimerId id = next_timer_++;
    timers_.emplace(id, info);
    fx.timers.push_back({id, delay});
    return id;
}

void Replica::cancel(std::optional<TimerId>& timer) {
    if (timer) timers_.erase(*timer);
    timer.reset();
}

void Replica::broadcast(const Message& msg, bool include_self, Effects& fx) {
    auto shared = std::make_shared<const Message>(msg);
    for (ReplicaId r = 0; r < cfg_.n; ++r) {
        if (r != cfg_.id || include_self) fx.send(NodeId::replica(r), shared);
    }
}

bool Replica::accepts_normal_case(View v) const { return phase_ == Phase::Active && v == view_; }

void Replica::buffer_future(NodeId from, const Message& msg) {
    if (future_.size() < kMaxFuture) future_.emplace_back(from, msg);
}

void Replica::replay_future(Effects& fx) {
    if (future_.empty()) return;
    auto buffered = std::move(future_);
    future_.clear();
    for (auto& [from, msg] : buffered) on_message(from, msg, fx);
}

// ---------------------------------------------------------------------------
// Requests

void Replica::send_inform(ClientId client, const ExecutionRecord& rec, Effects& fx) {
    fx.send(NodeId::client(client), InformMsg{rec.view, rec.seq, rec.txn_digest, rec.batch_digest, rec.result});
}

void Replica::forward_to_primary(const SignedTransaction& txn, Effects& fx) {
    fx.send(NodeId::replica(cfg_.primary_of(view_)), RequestMsg{txn});
}

void Replica::arm_request_timer(RequestId id, Effects& fx) {
    if (!cfg_.failure_detection) return;
    auto it = pending_.find(id);
    if (it == pending_.end() || it->second.timer) return;
    it->second.timer = arm({TimerInfo::Kind::Request, id}, current_timeout(), fx);
}

void Replica::on_request(NodeId from, const SignedTransaction& txn, Effects& fx) {
    if (!txn.verify(auth_)) return;
    RequestId id = txn.id();
    if (const auto* rec = store_.find_executed(id)) {
        send_inform(txn.client, *rec, fx);
        if (from.is_client()) {
            resend_slot(rec->seq, fx);
            // The client still lacks a quorum of informs and a peer has
            // given up on this view: with f replicas silent, that peer can
            // only catch up through a new view.
            if (phase_ == Phase::Active && peer_left_view()) detect_failure(fx);
        }
        return;
    }
    if (is_primary()) {
        // A client retransmitting a proposed request means the slot is stuck
        // somewhere (lost supports are never resent), so the primary times
        // it out like a backup would.
        if (from.is_client() && in_flight_.contains(id) && phase_ == Phase::Active) {
            pending_.try_emplace(id, Pending{txn, std::nullopt});
            arm_request_timer(id, fx);
        }
        enqueue_request(txn, fx);
        return;
    }
    pending_.try_emplace(id, Pending{txn, std::nullopt});
    // Only client-originated copies are forwarded; a replica-forwarded
    // request reaching a non-primary is kept in case this replica becomes
    // primary, but never bounced around.
    if (from.is_client() && phase_ == Phase::Active) {
        forward_to_primary(txn, fx);
        arm_request_timer(id, fx);
    }
}

// A client retry means some replica may have missed this slot. Normal-case
// messages are otherwise never resent, so repeat this replica's part of it.
void Replica::resend_slot(SeqNum k, Effects& fx) {
    if (phase_ != Phase::Active) return;
    auto it = log_.find(k);
    if (it == log_.end() || it->second.view != view_ || !it->second.certify) return;
    const LogEntry& e = it->second;
    if (is_primary()) broadcast(ProposeMsg{e.view, e.seq, *e.batch}, false, fx);
    broadcast(*e.certify, false, fx);
}

bool Replica::peer_left_view() const {
    for (auto it = vc_requests_.lower_bound(view_); it != vc_requests_.end(); ++it) {
        for (const auto& [signer, msg] : it->second) {
            if (signer != cfg_.id) return true;
        }
    }
    return false;
}

void Replica::enqueue_request(const SignedTransaction& txn, Effects& fx) {
    RequestId id = txn.id();
    if (queued_.contains(id) || in_flight_.contains(id)) return;
    queue_.push_back(txn);
    queued_.insert(id);
    try_propose(fx, false);
}

void Replica::try_propose(Effects& fx, bool flush) {
    if (!is_primary()) return;
    next_seq_ = std::max<SeqNum>(next_seq_, applied_count_);
    // Requests that took effect since they were queued need no proposal.
    std::erase_if(queue_, [&](const SignedTransaction& txn) {
        const auto* rec = store_.find_executed(txn.id());
        if (!rec) return false;
        send_inform(txn.client, *rec, fx);
        queued_.erase(txn.id());
        return true;
    });
    while (!queue_.empty()) {
        if (next_seq_ >= stable_count_ + cfg_.watermark_window) break;
        if (next_seq_ - applied_count_ >= cfg_.max_in_flight) break;
        if (queue_.size() < cfg_.batch_size && !flush && cfg_.batch_flush > 0) {
            // Partial batch: wait for more requests or the flush timer.
            if (!flush_timer_) flush_timer_ = arm({TimerInfo::Kind::BatchFlush, {}}, cfg_.batch_flush, fx);
            break;
        }
        std::size_t take = std::min(cfg_.batch_size, queue_.size());
        std::vector<SignedTransaction> batch(queue_.begin(), queue_.begin() + static_cast<long>(take));
        for (std::size_t i = 0; i < take; ++i) {
            queued_.erase(queue_.front().id());
            queue_.pop_front();
        }
        flush = false;
        cancel(flush_timer_);
        propose(std::move(batch), fx);
    }
}

void Replica::propose(std::vector<SignedTransaction> requests, Effects& fx) {
    for (const auto& txn : requests) in_flight_.insert(txn.id());
    SeqNum k = next_seq_++;
    LogEntry e;
    e.seq = k;
    e.view = view_;
    e.batch = Batch::make(std::move(requests));
    e.status = EntryStatus::Supported;
    e.certify_digest = certify_digest(k, view_, e.batch->digest);
    LogEntry& entry = log_[k] = std::move(e);

    broadcast(ProposeMsg{view_, k, *entry.batch}, false, fx);

    // The primary contributes its own share, so it needs only nf - 1 more.
    SignatureShare share = auth_.sign_share(cfg_.id, entry.certify_digest);
    if (cfg_.scheme == Scheme::MAC) broadcast(SupportMsg{view_, k, share}, false, fx);
    record_share(entry, share, fx);
    apply_early(entry, fx);
    // An early certify may have executed the entry and made a checkpoint
    // stable, which collects it.
    if (auto it = log_.find(k); it != log_.end()) check_quorum(it->second, fx);
}

// ---------------------------------------------------------------------------
// Support, certify, view-commit

void Replica::on_propose(ReplicaId from, const ProposeMsg& m, Effects& fx) {
    if (from != cfg_.primary_of(m.view)) return;
    if (m.view > view_) {
        buffer_future(NodeId::replica(from), m);
        return;
    }
    if (!accepts_normal_case(m.view) || cfg_.primary_of(view_) == cfg_.id) return;
    SeqNum k = m.seq;
    if (k < view_start_ || k < stable_count_ || k < applied_count_) return;
    if (k >= stable_count_ + cfg_.watermark_window) {
        // Beyond the window: hold until checkpoints advance it.
        buffer_future(NodeId::replica(from), m);
        return;
    }
    auto it = log_.find(k);
    if (it != log_.end() && it->second.view == view_ && it->second.batch) return; // first proposal binds
    if (m.batch.requests.empty()) return;
    for (const auto& txn : m.batch.requests) {
        if (!txn.verify(auth_)) return;
    }

    LogEntry e;
    e.seq = k;
    e.view = view_;
    e.batch = m.batch;
    e.status = EntryStatus::Supported;
    e.certify_digest = certify_digest(k, view_, m.batch.digest);
    LogEntry& entry = log_[k] = std::move(e);

    SignatureShare share = auth_.sign_share(cfg_.id, entry.certify_digest);
    if (cfg_.scheme == Scheme::TS) {
        fx.send(NodeId::replica(from), SupportMsg{view_, k, share});
    } else {
        broadcast(SupportMsg{view_, k, share}, false, fx);
        record_share(entry, share, fx);
    }
    apply_early(entry, fx);
    if (auto it = log_.find(k); it != log_.end()) check_quorum(it->second, fx);
}

void Replica::on_support(ReplicaId from, const SupportMsg& m, Effects& fx) {
    if (m.share.signer != from) return;
    if (m.view > view_) {
        buffer_future(NodeId::replica(from), m);
        return;
    }
    if (!accepts_normal_case(m.view)) return;
    if (cfg_.scheme == Scheme::TS && cfg_.primary_of(view_) != cfg_.id) return;
    if (m.seq < stable_count_ || m.seq >= stable_count_ + cfg_.watermark_window + cfg_.max_in_flight) return;

    auto it = log_.find(m.seq);
    if (it == log_.end() || it->second.view != view_ || !it->second.batch) {
        early_[{m.view, m.seq}].shares.try_emplace(from, m.share);
        return;
    }
    LogEntry& e = it->second;
    if (m.share.digest != e.certify_digest || !auth_.verify_share(m.share)) return;
    record_share(e, m.share, fx);
    check_quorum(e, fx);
}

void Replica::on_certify(ReplicaId from, const CertifyMsg& m, Effects& fx) {
    if (m.view > view_) {
        buffer_future(NodeId::replica(from), m);
        return;
    }
    if (!accepts_normal_case(m.view)) return;
    if (m.seq < stable_count_ || m.seq >= stable_count_ + cfg_.watermark_window + cfg_.max_in_flight) return;
    auto it = log_.find(m.seq);
    if (it == log_.end() || it->second.view != view_ || !it->second.batch) {
        auto& early = early_[{m.view, m.seq}];
        if (!early.certify) early.certify = m;
        return;
    }
    LogEntry& e = it->second;
    if (e.status >= EntryStatus::ViewCommitted) return;
    if (!auth_.verify_threshold(m.ts, e.certify_digest)) return;
    view_commit(e, m, fx);
}

void Replica::record_share(LogEntry& e, const SignatureShare& share, Effects&) { e.shares.try_emplace(share.signer, share); }

void Replica::apply_early(LogEntry& e, Effects& fx) {
    auto it = early_.find({e.view, e.seq});
    if (it == early_.end()) return;
    Early early = std::move(it->second);
    early_.erase(it);
    for (const auto& [signer, share] : early.shares) {
        if (share.digest == e.certify_digest && auth_.verify_share(share)) record_share(e, share, fx);
    }
    if (early.certify && e.status < EntryStatus::ViewCommitted &&
        auth_.verify_threshold(early.certify->ts, e.certify_digest)) {
        view_commit(e, *early.certify, fx);
    }
}

void Replica::check_quorum(LogEntry& e, Effects& fx) {
    if (e.status >= EntryStatus::ViewCommitted || e.shares.size() < cfg_.nf()) return;
    std::vector<SignatureShare> shares;
    shares.reserve(e.shares.size());
    for (const auto& [signer, share] : e.shares) shares.push_back(share);
    if (cfg_.scheme == Scheme::TS) {
        if (e.certify_sent || cfg_.primary_of(e.view) != cfg_.id) return;
        e.certify_sent = true;
        // Delivered to every replica, this one included, over the network.
        broadcast(CertifyMsg{e.view, e.seq, auth_.aggregate(shares)}, true, fx);
    } else {
        // MAC variant: nf matching supports, own included, are the commit
        // evidence; aggregating them keeps a transferable proof.
        if (!e.shares.contains(cfg_.id)) return;
        view_commit(e, CertifyProof{e.view, e.seq, auth_.aggregate(shares)}, fx);
    }
}

void Replica::view_commit(LogEntry& e, CertifyProof proof, Effects& fx) {
    e.status = EntryStatus::ViewCommitted;
    e.certify = std::move(proof);
    e.shares.clear();
    Transition t;
    t.kind = Transition::Kind::ViewCommit;
    t.view = e.view;
    t.seq = e.seq;
    t.digest = e.batch->digest;
    fx.transitions.push_back(std::move(t));
    try_execute(fx);
}

// ---------------------------------------------------------------------------
// Execution and rollback

void Replica::try_execute(Effects& fx) {
    if (executing_) {
        execute_again_ = true;
        return;
    }
    executing_ = true;
    do {
        execute_again_ = false;
        while (true) {
            // Lagging or diverged: nothing executes until the state arrives.
            if (awaiting_state_) break;
            auto it = log_.find(applied_count_);
            if (it == log_.end() || it->second.status != EntryStatus::ViewCommitted) break;
            LogEntry& e = it->second;

            std::vector<ExecutedRequest> fresh;
            e.undo = store_.execute(*e.batch, e.seq, e.view, &fresh);
            const Block& block = ledger_.append(e.seq, e.view, e.batch->digest, *e.certify);
            e.status = EntryStatus::Executed;
            ++applied_count_;

            Transition t;
            t.kind = Transition::Kind::Execute;
            t.view = e.view;
            t.seq = e.seq;
            t.digest = e.batch->digest;
            t.aux = block.hash();
            for (const auto& txn : e.batch->requests) t.txns.push_back(txn.digest());
            fx.transitions.push_back(std::move(t));

            for (const auto& ex : fresh) send_inform(ex.txn->client, *ex.record, fx);
            for (const auto& txn : e.batch->requests) {
                in_flight_.erase(txn.id());
                auto p = pending_.find(txn.id());
                if (p != pending_.end()) {
                    cancel(p->second.timer);
                    pending_.erase(p);
                }
            }
            if (phase_ == Phase::Active && e.view == view_) failed_vcs_ = 0;

            SeqNum seq = e.seq;
            if (is_checkpoint_seq(seq, cfg_.checkpoint_interval)) emit_checkpoint(fx);
            if (pending_cert_ && pending_cert_->seq == seq) {
                CheckpointCertificate cert = *pending_cert_;
                pending_cert_.reset();
                adopt_certificate(cert, fx);
            }
        }
    } while (execute_again_);
    executing_ = false;
    if (is_primary()) try_propose(fx, false);
}

void Replica::rollback_to_count(std::size_t count, Effects& fx) {
    count = std::max(count, stable_count_);
    if (count >= applied_count_) return;
    Transition t;
    t.kind = Transition::Kind::Rollback;
    for (std::size_t k = applied_count_; k-- > count;) {
        LogEntry& e = log_.at(k);
        store_.undo(*e.undo);
        e.undo.reset();
        e.status = EntryStatus::ViewCommitted;
        t.entries.push_back({e.seq, e.view, e.batch->digest});
    }
    ledger_.truncate_to_count(count);
    applied_count_ = count;
    own_snapshots_.erase(own_snapshots_.lower_bound(count), own_snapshots_.end());
    t.seq = count;
    fx.transitions.push_back(std::move(t));
}

} // namespace poe
