// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "poe/client.hpp"

#include "poe/view_change.hpp"

#include <tuple>

namespace poe {

Client::Client(ClientConfig cfg, const Authenticator& auth) : cfg_(cfg), auth_(auth) {
    if (cfg_.n <= 3 * cfg_.f) throw ConfigInvalid("client needs n > 3f");
}

SignedTransaction Client::submit(Bytes payload, Effects& fx) {
    std::uint64_t nonce = next_nonce_++;
    SignedTransaction txn = SignedTransaction::make(auth_, cfg_.id, nonce, std::move(payload));
    PendingRequest& p = pending_[nonce];
    p.txn = txn;
    p.digest = txn.digest();
    by_digest_[p.digest] = nonce;
    fx.send(NodeId::replica(believed_primary()), RequestMsg{txn});
    arm_timer(nonce, p, fx);
    return txn;
}

void Client::arm_timer(std::uint64_t nonce, PendingRequest& p, Effects& fx) {
    if (!cfg_.retransmit) return;
    TimerId id = next_timer_++;
    timers_.emplace(id, nonce);
    p.timer = id;
    fx.timers.push_back({id, backoff_timeout(cfg_.timeout, p.attempts, cfg_.timeout_cap_exponent)});
}

std::optional<CommitEvent> Client::on_inform(ReplicaId from, const InformMsg& m, Effects&) {
    if (from >= cfg_.n) return std::nullopt;
    auto d = by_digest_.find(m.txn_digest);
    if (d == by_digest_.end()) return std::nullopt;
    std::uint64_t nonce = d->second;
    auto it = pending_.find(nonce);
    if (it == pending_.end()) return std::nullopt;
    PendingRequest& p = it->second;
    p.informs[from] = m;

    std::size_t matching = 0;
    for (const auto& [replica, other] : p.informs) {
        if (std::tie(other.view, other.seq, other.result, other.batch_digest) ==
            std::tie(m.view, m.seq, m.result, m.batch_digest)) {
            ++matching;
        }
    }
    if (matching < cfg_.nf()) return std::nullopt;

    CommitEvent ev{cfg_.id, nonce, m.txn_digest, m.batch_digest, m.view, m.seq, m.result};
    believed_view_ = std::max(believed_view_, m.view);
    if (p.timer) timers_.erase(*p.timer);
    by_digest_.erase(d);
    pending_.erase(it);
    committed_.emplace(nonce, ev);
    return ev;
}

void Client::on_timer(TimerId id, Effects& fx) {
    auto t = timers_.find(id);
    if (t == timers_.end()) return;
    std::uint64_t nonce = t->second;
    timers_.erase(t);
    auto it = pending_.find(nonce);
    if (it == pending_.end()) return;
    PendingRequest& p = it->second;
    p.timer.reset();
    // Learn about newer views from whatever informs arrived.
    for (const auto& [replica, inform] : p.informs) believed_view_ = std::max(believed_view_, inform.view);
    auto msg = std::make_shared<const Message>(RequestMsg{p.txn});
    for (ReplicaId r = 0; r < cfg_.n; ++r) fx.send(NodeId::replica(r), msg);
    ++p.attempts;
    arm_timer(nonce, p, fx);
}

} // namespace poe
