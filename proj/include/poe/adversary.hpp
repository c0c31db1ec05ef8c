// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "poe/crypto.hpp"
#include "poe/messages.hpp"
#include "poe/rng.hpp"
#include "poe/scenario.hpp"

#include <memory>
#include <optional>
#include <set>
#include <vector>

namespace poe {

/// A message as it leaves a node after the adversary had its say.
/// `claimed_from` lets a faulty replica pretend to be someone else; the
/// channel (MAC scheme) or the simulator (TS scheme) catches that.
struct Emission {
    NodeId to;
    std::shared_ptr<const Message> msg;
    std::optional<ReplicaId> claimed_from;
};

struct AdversaryContext {
    SimTime now = 0;
    Rng& rng;
    const Authenticator& auth;
    const Scenario& scenario;
};

/// Byzantine behavior program. Faulty replicas run the honest state
/// machine; the program rewrites, drops or adds to what they send, and may
/// observe what they receive. It signs only as replicas it controls and as
/// its own client identity.
class Adversary {
  public:
    explicit Adversary(const AdversarySpec& spec);
    virtual ~Adversary() = default;

    bool controls(ReplicaId r) const { return faulty_.contains(r); }
    const std::set<ReplicaId>& faulty() const { return faulty_; }

    /// A crashed replica neither sends, receives nor fires timers.
    virtual bool crashed(ReplicaId, SimTime) const { return false; }

    /// Called for each message sent by a replica this program controls.
    /// The default forwards it unchanged.
    virtual void on_send(AdversaryContext& ctx, ReplicaId from, const Emission& out, std::vector<Emission>& result);

    /// Called when a controlled replica receives a message; may emit extra
    /// messages on its behalf.
    virtual void on_deliver(AdversaryContext&, NodeId, ReplicaId, const Message&, std::vector<Emission>&) {}

    /// Extra latency on a directed link.
    virtual SimTime extra_delay(NodeId, NodeId) const { return 0; }

  protected:
    AdversarySpec spec_;
    std::set<ReplicaId> faulty_;
};

/// Client identity owned by the adversary; used for junk transactions.
inline constexpr ClientId kAdversaryClient = 0xadad;

std::unique_ptr<Adversary> make_adversary(const Scenario& scenario, Rng& setup_rng);

} // namespace poe
