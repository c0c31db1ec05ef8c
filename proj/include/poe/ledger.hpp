// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "poe/messages.hpp"

#include <optional>
#include <string>
#include <vector>

namespace poe {

/// prev_hash of block 0: the hash of the initial primary's identity.
Digest genesis_hash(ReplicaId initial_primary = 0);

/// Per-replica hash-chained block store. Blocks are numbered from 0 and
/// contiguous; block k links to the header hash of block k-1.
class Ledger {
  public:
    /// Without an authenticator, proofs are stored but not verified.
    explicit Ledger(const Authenticator* auth = nullptr, ReplicaId initial_primary = 0);

    /// Appends the block for seq `seq`. Throws LedgerError (out of order
    /// append, invalid proof).
    const Block& append(SeqNum seq, View view, const Digest& batch_digest, const CertifyProof& proof);

    /// Drops every block with seq >= `count` so that exactly `count` blocks
    /// remain. Refuses to cut below the protected prefix.
    void truncate_to_count(std::size_t count);

    /// Marks the first `count` blocks as covered by a stable checkpoint.
    void protect(std::size_t count);

    /// Replaces the whole chain (state transfer). Throws LedgerError if the
    /// chain does not verify.
    void replace(std::vector<Block> blocks);

    bool verify_chain() const;

    std::size_t size() const { return blocks_.size(); }
    bool empty() const { return blocks_.empty(); }
    const Block& at(SeqNum seq) const { return blocks_.at(seq); }
    const std::vector<Block>& blocks() const { return blocks_; }
    const Digest& genesis() const { return genesis_; }

    /// Header hash of the tip, or the genesis hash for an empty chain.
    Digest head() const;

    /// One block per line, hex canonical encoding.
    std::string export_text() const;

  private:
    bool proof_valid(const Block& b) const;

    const Authenticator* auth_;
    Digest genesis_;
    std::vector<Block> blocks_;
    std::size_t protected_ = 0;
};

/// Verifies a standalone chain from genesis.
bool verify_chain(const std::vector<Block>& blocks, const Digest& genesis, const Authenticator* auth);

std::vector<Block> parse_ledger_export(const std::string& text);

struct LedgerDiff {
    std::size_t common_prefix = 0; // number of identical leading headers
    std::size_t left_size = 0;
    std::size_t right_size = 0;
    bool diverged = false;         // true iff the chains disagree below min(size)
    std::optional<SeqNum> first_mismatch;
};

LedgerDiff diff_ledgers(const std::vector<Block>& left, const std::vector<Block>& right);

} // namespace poe
