// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "poe/view_change.hpp"

#include "poe/checkpoint.hpp"
#include "poe/replica.hpp"

#include <algorithm>
#include <set>
#include <tuple>

namespace poe {

bool validate_vc_request(const VcRequestMsg& m, const ReplicaConfig& cfg, const Authenticator& auth) {
    if (m.signer() >= cfg.n || m.entered_view > m.view) return false;
    if (!auth.verify(m.sig, signing_digest(m))) return false;
    if (m.checkpoint && !validate_certificate(*m.checkpoint, cfg, auth)) return false;
    SeqNum base = m.first_seq();
    for (std::size_t i = 0; i < m.history.size(); ++i) {
        const HistoryEntry& e = m.history[i];
        if (e.proof.seq != base + i || e.proof.view > m.view) return false;
        if (!auth.verify_threshold(e.proof.ts, certify_digest(e.proof.seq, e.proof.view, e.batch.digest))) {
            return false;
        }
    }
    return true;
}

bool validate_nv_propose(const NvProposeMsg& m, ReplicaId sender, const ReplicaConfig& cfg,
                         const Authenticator& auth) {
    if (m.new_view == 0 || cfg.primary_of(m.new_view) != sender) return false;
    if (m.proofs.size() != cfg.nf()) return false;
    std::set<ReplicaId> signers;
    for (const auto& p : m.proofs) {
        if (p.view + 1 != m.new_view) return false;
        if (!signers.insert(p.signer()).second) return false;
        if (!validate_vc_request(p, cfg, auth)) return false;
    }
    return true;
}

NewViewPlan select_history(std::span<const VcRequestMsg> proofs) {
    const VcRequestMsg* best = nullptr;
    const CheckpointCertificate* checkpoint = nullptr;
    auto rank = [](const VcRequestMsg& m) { return std::make_tuple(m.entered_view, m.end_seq()); };
    for (const auto& m : proofs) {
        if (!best || rank(m) > rank(*best) || (rank(m) == rank(*best) && m.signer() < best->signer())) best = &m;
        if (m.checkpoint && (!checkpoint || m.checkpoint->seq > checkpoint->seq)) checkpoint = &*m.checkpoint;
    }
    NewViewPlan plan;
    if (!best) return plan;
    plan.source = best->signer();
    // A stable checkpoint anywhere in the quorum is final, even when the
    // chosen history starts below it.
    if (checkpoint) {
        plan.checkpoint = *checkpoint;
        plan.base = checkpoint->seq + 1;
    }
    for (const auto& h : best->history) {
        if (h.proof.seq >= plan.base) plan.entries.push_back(h);
    }
    if (!plan.entries.empty() && plan.entries.front().proof.seq != plan.base) plan.entries.clear();
    return plan;
}

SimTime backoff_timeout(SimTime base, unsigned attempts, unsigned cap) {
    return base << std::min(attempts, cap);
}

// ---------------------------------------------------------------------------
// Replica: failure detection and new-view installation

SimTime Replica::current_timeout() const {
    return backoff_timeout(cfg_.timeout_base, failed_vcs_, cfg_.timeout_cap_exponent);
}

VcRequestMsg Replica::make_vc_request(View view) const {
    VcRequestMsg m;
    m.view = view;
    m.entered_view = entered_view_;
    // The highest certificate known; a pending state transfer counts, since
    // the log below it may already be gone.
    m.checkpoint = stable_cert_;
    if (awaiting_state_ && (!m.checkpoint || awaiting_state_->seq > m.checkpoint->seq)) m.checkpoint = awaiting_state_;
    // Every view-committed entry is reported, executed or not: entries of a
    // new view still waiting for state are as binding as executed ones.
    for (SeqNum k = m.first_seq();; ++k) {
        auto it = log_.find(k);
        if (it == log_.end() || it->second.status < EntryStatus::ViewCommitted) break;
        m.history.push_back({*it->second.certify, *it->second.batch});
    }
    m.sig = auth_.sign(cfg_.id, signing_digest(m));
    return m;
}

void Replica::detect_failure(Effects& fx) {
    if (vc_sent_ && *vc_sent_ >= view_) return;
    send_vc_request(view_, fx);
}

void Replica::leave_view() {
    cancel(flush_timer_);
    for (auto& [id, p] : pending_) cancel(p.timer);
    // Requests queued at a former primary stay known; if this replica leads
    // a later view it proposes them.
    for (auto& txn : queue_) pending_.try_emplace(txn.id(), Pending{txn, std::nullopt});
    queue_.clear();
    queued_.clear();
    in_flight_.clear();
    early_.clear();
}

void Replica::send_vc_request(View abandon, Effects& fx) {
    leave_view();
    view_ = std::max(view_, abandon);
    vc_sent_ = view_;
    phase_ = cfg_.primary_of(view_ + 1) == cfg_.id ? Phase::Collecting : Phase::AwaitingNewView;

    VcRequestMsg m = make_vc_request(view_);
    Transition t;
    t.kind = Transition::Kind::VcRequest;
    t.view = view_;
    t.seq = m.end_seq();
    fx.transitions.push_back(std::move(t));

    vc_requests_[view_][cfg_.id] = m;
    broadcast(m, false, fx);
    // Requests from views this replica already left are of no use.
    vc_requests_.erase(vc_requests_.begin(), vc_requests_.lower_bound(view_));

    cancel(vc_timer_);
    if (cfg_.failure_detection) vc_timer_ = arm({TimerInfo::Kind::ViewChange, {}}, current_timeout(), fx);
    maybe_propose_new_view(fx);
}

void Replica::on_view_change_timeout(Effects& fx) {
    if (phase_ == Phase::Active) return;
    failed_vcs_ = std::min(failed_vcs_ + 1, cfg_.timeout_cap_exponent);
    send_vc_request(view_ + 1, fx);
}

void Replica::on_vc_request(ReplicaId from, const VcRequestMsg& m, Effects& fx) {
    if (m.signer() != from || m.view < view_) return;
    auto& slot = vc_requests_[m.view];
    if (slot.contains(from)) return;
    if (!validate_vc_request(m, cfg_, auth_)) {
        if (slot.empty()) vc_requests_.erase(m.view);
        return;
    }
    slot.emplace(from, m);
    maybe_join(fx);
    maybe_propose_new_view(fx);
}

void Replica::maybe_join(Effects& fx) {
    // Highest view each other replica has abandoned, counting only views this
    // replica has not yet left behind.
    std::map<ReplicaId, View> highest;
    for (const auto& [view, by_signer] : vc_requests_) {
        if (view < view_) continue;
        for (const auto& [signer, msg] : by_signer) {
            if (signer == cfg_.id) continue;
            auto& h = highest[signer];
            h = std::max(h, view);
        }
    }
    if (highest.size() < cfg_.f + 1) return;
    std::vector<View> views;
    for (const auto& [signer, v] : highest) views.push_back(v);
    std::sort(views.begin(), views.end(), std::greater<>());
    // f + 1 replicas abandoned at least this view, so at least one of them
    // is non-faulty.
    View target = views[cfg_.f];
    if (target < view_ || (vc_sent_ && *vc_sent_ >= target)) return;
    send_vc_request(target, fx);
}

void Replica::maybe_propose_new_view(Effects& fx) {
    if (!vc_sent_ || *vc_sent_ != view_ || phase_ == Phase::Active) return;
    View next = view_ + 1;
    if (cfg_.primary_of(next) != cfg_.id || (nv_sent_ && *nv_sent_ >= next)) return;
    auto it = vc_requests_.find(view_);
    if (it == vc_requests_.end() || it->second.size() < cfg_.nf()) return;

    NvProposeMsg nv;
    nv.new_view = next;
    // Own request first, then the lowest other signers.
    nv.proofs.push_back(it->second.at(cfg_.id));
    for (const auto& [signer, msg] : it->second) {
        if (nv.proofs.size() == cfg_.nf()) break;
        if (signer != cfg_.id) nv.proofs.push_back(msg);
    }
    nv_sent_ = next;
    Transition t;
    t.kind = Transition::Kind::NvPropose;
    t.view = next;
    fx.transitions.push_back(std::move(t));
    broadcast(nv, false, fx);
    adopt_new_view(nv, fx);
}

void Replica::on_nv_propose(ReplicaId from, const NvProposeMsg& m, Effects& fx) {
    if (m.new_view <= view_) return;
    if (!validate_nv_propose(m, from, cfg_, auth_)) {
        // An invalid new-view from the designated primary counts as its failure.
        if (m.new_view == view_ + 1 && from == cfg_.primary_of(m.new_view) &&
            (!vc_sent_ || *vc_sent_ < m.new_view)) {
            send_vc_request(m.new_view, fx);
        }
        return;
    }
    adopt_new_view(m, fx);
}

void Replica::adopt_new_view(const NvProposeMsg& m, Effects& fx) {
    NewViewPlan plan = select_history(m.proofs);
    leave_view();
    cancel(vc_timer_);

    if (plan.checkpoint && plan.checkpoint->seq >= stable_count_) {
        adopt_certificate(*plan.checkpoint, fx);
        // The log below E' is about to be discarded, so a replica that was
        // waiting to catch up locally has to fetch the state instead.
        if (applied_count_ < plan.base && !awaiting_state_) request_state(*plan.checkpoint, fx);
    }

    // Entries below `lo` are covered by this replica's own stable state or an
    // in-progress state transfer.
    SeqNum lo = std::max<SeqNum>(plan.base, stable_count_);
    if (awaiting_state_) lo = std::max<SeqNum>(lo, awaiting_state_->seq + 1);

    // Reported before the rollback it causes.
    Transition enter;
    enter.kind = Transition::Kind::EnterView;
    enter.view = m.new_view;
    enter.seq = plan.base;
    for (const auto& h : plan.entries) enter.entries.push_back({h.proof.seq, h.proof.view, h.batch.digest});
    fx.transitions.push_back(std::move(enter));

    SeqNum keep = std::min<SeqNum>(lo, applied_count_);
    while (keep < applied_count_ && keep < plan.end()) {
        const LogEntry& e = log_.at(keep);
        const HistoryEntry& h = plan.entries[keep - plan.base];
        if (e.view != h.proof.view || e.batch->digest != h.batch.digest) break;
        ++keep;
    }
    if (keep < applied_count_) rollback_to_count(keep, fx);
    // Whatever is not executed belongs to abandoned views.
    log_.erase(log_.lower_bound(applied_count_), log_.end());

    view_ = m.new_view;
    entered_view_ = m.new_view;
    phase_ = Phase::Active;
    view_start_ = std::max<SeqNum>(plan.end(), applied_count_);
    vc_requests_.erase(vc_requests_.begin(), vc_requests_.lower_bound(view_));

    for (SeqNum k = std::max<SeqNum>(lo, applied_count_); k < plan.end(); ++k) {
        const HistoryEntry& h = plan.entries[k - plan.base];
        LogEntry e;
        e.seq = k;
        e.view = h.proof.view;
        e.batch = h.batch;
        e.status = EntryStatus::ViewCommitted;
        e.certify_digest = certify_digest(k, h.proof.view, h.batch.digest);
        e.certify = h.proof;
        log_[k] = std::move(e);
        Transition t;
        t.kind = Transition::Kind::ViewCommit;
        t.view = h.proof.view;
        t.seq = k;
        t.digest = h.batch.digest;
        fx.transitions.push_back(std::move(t));
    }

    if (cfg_.primary_of(view_) == cfg_.id) next_seq_ = view_start_;
    try_execute(fx);

    // Re-drive requests still waiting for execution under the new primary.
    auto waiting = std::move(pending_);
    pending_.clear();
    for (auto& [id, p] : waiting) {
        if (store_.find_executed(id)) continue;
        if (is_primary()) {
            enqueue_request(p.txn, fx);
        } else {
            pending_.emplace(id, Pending{p.txn, std::nullopt});
            forward_to_primary(p.txn, fx);
            arm_request_timer(id, fx);
        }
    }
    replay_future(fx);
    if (is_primary()) try_propose(fx, false);
}

} // namespace poe
