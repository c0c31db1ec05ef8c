// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "poe/crypto.hpp"
#include "poe/messages.hpp"
#include "poe/replica.hpp"

#include <map>
#include <optional>

namespace poe {

struct ClientConfig {
    ClientId id = 0;
    std::uint32_t n = 4;
    std::uint32_t f = 1;
    SimTime timeout = 30;
    unsigned timeout_cap_exponent = 10;
    bool retransmit = true; // broadcast on timeout

    std::uint32_t nf() const { return n - f; }
};

struct CommitEvent {
    ClientId client = 0;
    std::uint64_t nonce = 0;
    Digest txn_digest;
    Digest batch_digest;
    View view = 0;
    SeqNum seq = 0;
    Bytes result;
};

/// Client state machine: a request commits once nf distinct replicas report
/// the same (view, seq, result, digests) for it.
class Client {
  public:
    Client(ClientConfig cfg, const Authenticator& auth);

    /// Signs `payload` under a fresh nonce and sends it to the believed
    /// primary.
    SignedTransaction submit(Bytes payload, Effects& fx);

    std::optional<CommitEvent> on_inform(ReplicaId from, const InformMsg& m, Effects& fx);
    void on_timer(TimerId id, Effects& fx);

    ClientId id() const { return cfg_.id; }
    std::uint64_t next_nonce() const { return next_nonce_; }
    std::size_t pending() const { return pending_.size(); }
    std::size_t committed() const { return committed_.size(); }
    const std::map<std::uint64_t, CommitEvent>& commits() const { return committed_; }
    ReplicaId believed_primary() const { return static_cast<ReplicaId>(believed_view_ % cfg_.n); }

  private:
    struct PendingRequest {
        SignedTransaction txn;
        Digest digest;
        std::map<ReplicaId, InformMsg> informs; // latest per replica
        std::optional<TimerId> timer;
        unsigned attempts = 0;
    };

    void arm_timer(std::uint64_t nonce, PendingRequest& p, Effects& fx);

    ClientConfig cfg_;
    const Authenticator& auth_;
    std::uint64_t next_nonce_ = 0;
    View believed_view_ = 0;
    std::map<std::uint64_t, PendingRequest> pending_;
    std::map<Digest, std::uint64_t> by_digest_;
    std::map<std::uint64_t, CommitEvent> committed_;
    std::map<TimerId, std::uint64_t> timers_;
    TimerId next_timer_ = 1;
};

} // namespace poe
