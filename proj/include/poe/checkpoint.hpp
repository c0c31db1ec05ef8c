// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "poe/config.hpp"
#include "poe/crypto.hpp"
#include "poe/messages.hpp"

#include <map>
#include <optional>

namespace poe {

/// Checkpoints are taken after executing seq k when k > 0 and k % C == 0.
inline bool is_checkpoint_seq(SeqNum seq, std::size_t interval) { return seq > 0 && seq % interval == 0; }

CheckpointMsg make_checkpoint(SeqNum seq, const Digest& state_digest, const Digest& ledger_digest,
                              ReplicaId signer, const Authenticator& auth);

/// Forms a certificate once nf votes at `seq` agree on (state, ledger)
/// digests. Votes are assumed verified.
std::optional<CheckpointCertificate> try_certify(SeqNum seq, const std::map<ReplicaId, CheckpointMsg>& votes,
                                                 std::size_t nf);

/// At least nf votes from distinct members, each signed and matching the
/// certificate's seq and digests.
bool validate_certificate(const CheckpointCertificate& cert, const ReplicaConfig& cfg, const Authenticator& auth);

} // namespace poe
