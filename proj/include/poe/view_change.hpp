// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "poe/config.hpp"
#include "poe/crypto.hpp"
#include "poe/messages.hpp"

#include <optional>
#include <span>
#include <vector>

namespace poe {

/// Signature, checkpoint certificate, consecutiveness and every certify
/// proof of a vc-request. History entries may come from any view up to
/// m.view; consecutiveness is judged on seq alone.
bool validate_vc_request(const VcRequestMsg& m, const ReplicaConfig& cfg, const Authenticator& auth);

/// Sender must be the primary of new_view and the proofs nf valid
/// vc-requests for new_view - 1 from distinct signers.
bool validate_nv_propose(const NvProposeMsg& m, ReplicaId sender, const ReplicaConfig& cfg,
                         const Authenticator& auth);

/// The history a new view starts from.
struct NewViewPlan {
    ReplicaId source = 0; // signer whose history was chosen
    std::optional<CheckpointCertificate> checkpoint;
    SeqNum base = 0; // first seq of the history
    std::vector<HistoryEntry> entries;

    SeqNum end() const { return base + entries.size(); }
};

/// Chooses E' among (already validated) vc-requests: the history of the
/// signer that most recently entered a view, longest among those, lowest
/// signer on ties, cut to start after the highest checkpoint in the quorum.
NewViewPlan select_history(std::span<const VcRequestMsg> proofs);

/// 2^min(attempts, cap) * base.
SimTime backoff_timeout(SimTime base, unsigned attempts, unsigned cap);

} // namespace poe
