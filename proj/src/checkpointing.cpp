// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "poe/checkpoint.hpp"

#include "poe/replica.hpp"

#include <set>

namespace poe {

CheckpointMsg make_checkpoint(SeqNum seq, const Digest& state_digest, const Digest& ledger_digest,
                              ReplicaId signer, const Authenticator& auth) {
    CheckpointMsg m;
    m.seq = seq;
    m.state_digest = state_digest;
    m.ledger_digest = ledger_digest;
    m.sig = auth.sign(signer, signing_digest(m));
    return m;
}

std::optional<CheckpointCertificate> try_certify(SeqNum seq, const std::map<ReplicaId, CheckpointMsg>& votes,
                                                 std::size_t nf) {
    std::map<std::pair<Digest, Digest>, std::vector<const CheckpointMsg*>> groups;
    for (const auto& [signer, vote] : votes) {
        if (vote.seq != seq || vote.signer() != signer) continue;
        auto& group = groups[{vote.state_digest, vote.ledger_digest}];
        group.push_back(&vote);
        if (group.size() >= nf) {
            CheckpointCertificate cert;
            cert.seq = seq;
            cert.state_digest = vote.state_digest;
            cert.ledger_digest = vote.ledger_digest;
            for (const auto* v : group) cert.votes.push_back(*v);
            return cert;
        }
    }
    return std::nullopt;
}

bool validate_certificate(const CheckpointCertificate& cert, const ReplicaConfig& cfg, const Authenticator& auth) {
    std::set<ReplicaId> signers;
    for (const auto& v : cert.votes) {
        if (v.seq != cert.seq || v.state_digest != cert.state_digest || v.ledger_digest != cert.ledger_digest) {
            return false;
        }
        if (v.signer() >= cfg.n || !signers.insert(v.signer()).second) return false;
        if (!auth.verify(v.sig, signing_digest(v))) return false;
    }
    return signers.size() >= cfg.nf();
}

// ---------------------------------------------------------------------------
// Replica: checkpoints and state transfer

void Replica::emit_checkpoint(Effects& fx) {
    SeqNum seq = applied_count_ - 1;
    StateSnapshot snapshot = store_.snapshot();
    CheckpointMsg m = make_checkpoint(seq, snapshot_digest(snapshot), ledger_.head(), cfg_.id, auth_);
    own_snapshots_[seq] = std::move(snapshot);
    broadcast(m, false, fx);
    on_checkpoint(cfg_.id, m, fx);
}

void Replica::on_checkpoint(ReplicaId from, const CheckpointMsg& m, Effects& fx) {
    if (m.signer() != from || m.seq < stable_count_) return;
    auto& votes = checkpoint_votes_[m.seq];
    if (votes.contains(from)) return;
    if (from != cfg_.id && !auth_.verify(m.sig, signing_digest(m))) {
        if (votes.empty()) checkpoint_votes_.erase(m.seq);
        return;
    }
    votes.emplace(from, m);
    if (auto cert = try_certify(m.seq, votes, cfg_.nf())) adopt_certificate(*cert, fx);
}

void Replica::adopt_certificate(const CheckpointCertificate& cert, Effects& fx) {
    if (cert.seq < stable_count_) return;
    if (awaiting_state_ && awaiting_state_->seq >= cert.seq) return;
    if (applied_count_ > cert.seq) {
        // The ledger head binds the whole executed prefix, and execution is
        // deterministic, so a matching head means matching state.
        if (ledger_.at(cert.seq).hash() == cert.ledger_digest) {
            make_stable(cert, fx);
        } else {
            // Diverged speculatively; the state reply tells how far to undo.
            request_state(cert, fx);
        }
        return;
    }
    bool can_catch_up = true;
    for (SeqNum k = applied_count_; k <= cert.seq && can_catch_up; ++k) {
        auto it = log_.find(k);
        can_catch_up = it != log_.end() && it->second.status >= EntryStatus::ViewCommitted;
    }
    if (can_catch_up) {
        if (!pending_cert_ || pending_cert_->seq < cert.seq) pending_cert_ = cert;
        return;
    }
    request_state(cert, fx);
}

void Replica::make_stable(const CheckpointCertificate& cert, Effects& fx) {
    stable_count_ = cert.seq + 1;
    stable_cert_ = cert;
    auto snap = own_snapshots_.find(cert.seq);
    if (snap != own_snapshots_.end()) {
        stable_snapshot_ = std::move(snap->second);
    } else {
        stable_snapshot_.reset();
    }
    ledger_.protect(stable_count_);
    if (pending_cert_ && pending_cert_->seq <= cert.seq) pending_cert_.reset();
    garbage_collect();

    Transition t;
    t.kind = Transition::Kind::StableCheckpoint;
    t.seq = cert.seq;
    t.digest = cert.state_digest;
    t.aux = cert.ledger_digest;
    fx.transitions.push_back(std::move(t));

    // The watermark window moved.
    replay_future(fx);
    if (is_primary()) try_propose(fx, false);
}

void Replica::garbage_collect() {
    log_.erase(log_.begin(), log_.lower_bound(stable_count_));
    own_snapshots_.erase(own_snapshots_.begin(), own_snapshots_.lower_bound(stable_count_));
    checkpoint_votes_.erase(checkpoint_votes_.begin(), checkpoint_votes_.lower_bound(stable_count_));
    std::erase_if(early_, [&](const auto& kv) { return kv.first.second < stable_count_; });
}

void Replica::request_state(const CheckpointCertificate& cert, Effects& fx) {
    if (!awaiting_state_ || awaiting_state_->seq < cert.seq) awaiting_state_ = cert;
    StateRequestMsg req{awaiting_state_->seq};
    auto shared = std::make_shared<const Message>(req);
    for (const auto& vote : awaiting_state_->votes) {
        if (vote.signer() != cfg_.id) fx.send(NodeId::replica(vote.signer()), shared);
    }
    cancel(state_timer_);
    state_timer_ = arm({TimerInfo::Kind::StateTransfer, {}}, 4 * cfg_.timeout_base, fx);
}

void Replica::on_state_request(ReplicaId from, const StateRequestMsg& m, Effects& fx) {
    if (!stable_cert_ || !stable_snapshot_ || stable_cert_->seq < m.seq) return;
    StateReplyMsg reply;
    reply.certificate = *stable_cert_;
    reply.snapshot = *stable_snapshot_;
    const auto& blocks = ledger_.blocks();
    reply.blocks.assign(blocks.begin(), blocks.begin() + static_cast<long>(stable_count_));
    fx.send(NodeId::replica(from), std::move(reply));
}

void Replica::on_state_reply(ReplicaId, const StateReplyMsg& m, Effects& fx) {
    if (!awaiting_state_) return;
    const CheckpointCertificate& cert = m.certificate;
    if (cert.seq < awaiting_state_->seq || cert.seq < stable_count_) return;
    if (!validate_certificate(cert, cfg_, auth_)) return;
    if (snapshot_digest(m.snapshot) != cert.state_digest) return;
    if (m.blocks.size() != cert.seq + 1 || m.blocks.back().hash() != cert.ledger_digest) return;
    if (!verify_chain(m.blocks, ledger_.genesis(), &auth_)) return;

    if (applied_count_ > cert.seq && ledger_.at(cert.seq).hash() == cert.ledger_digest) {
        // Caught up locally in the meantime.
        awaiting_state_.reset();
        cancel(state_timer_);
        make_stable(cert, fx);
        try_execute(fx);
        return;
    }
    // Undo only the executions that differ from the certified chain.
    std::size_t common = 0;
    while (common < applied_count_ && common < m.blocks.size() && ledger_.at(common).hash() == m.blocks[common].hash()) {
        ++common;
    }
    rollback_to_count(common, fx);

    store_.restore(m.snapshot);
    ledger_.replace(m.blocks);
    applied_count_ = cert.seq + 1;
    stable_count_ = cert.seq + 1;
    ledger_.protect(stable_count_);
    stable_cert_ = cert;
    stable_snapshot_ = m.snapshot;
    own_snapshots_.clear();
    awaiting_state_.reset();
    cancel(state_timer_);
    if (pending_cert_ && pending_cert_->seq <= cert.seq) pending_cert_.reset();
    garbage_collect();
    // Later entries executed on top of the replaced state run again.
    for (auto& [seq, e] : log_) {
        if (e.status == EntryStatus::Executed) {
            e.status = EntryStatus::ViewCommitted;
            e.undo.reset();
        }
    }
    for (auto it = pending_.begin(); it != pending_.end();) {
        if (store_.find_executed(it->first)) {
            cancel(it->second.timer);
            it = pending_.erase(it);
        } else {
            ++it;
        }
    }

    Transition t;
    t.kind = Transition::Kind::Install;
    t.seq = cert.seq;
    t.digest = cert.state_digest;
    t.aux = cert.ledger_digest;
    for (const auto& b : m.blocks) t.entries.push_back({b.seq, b.view, b.digest});
    fx.transitions.push_back(std::move(t));

    try_execute(fx);
    replay_future(fx);
    if (is_primary()) try_propose(fx, false);
}

} // namespace poe
