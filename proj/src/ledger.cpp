// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "poe/ledger.hpp"

#include "poe/codec.hpp"

#include <fmt/format.h>

#include <sstream>

namespace poe {

Digest genesis_hash(ReplicaId initial_primary) {
    return hash(NodeId::replica(initial_primary).str());
}

Ledger::Ledger(const Authenticator* auth, ReplicaId initial_primary)
    : auth_(auth), genesis_(genesis_hash(initial_primary)) {}

bool Ledger::proof_valid(const Block& b) const {
    if (b.proof.seq != b.seq || b.proof.view != b.view) return false;
    if (!auth_) return true;
    return auth_->verify_threshold(b.proof.ts, certify_digest(b.seq, b.view, b.digest));
}

const Block& Ledger::append(SeqNum seq, View view, const Digest& batch_digest, const CertifyProof& proof) {
    if (seq != blocks_.size()) {
        throw LedgerError(fmt::format("out of order append: seq {} onto a chain of {} blocks", seq, blocks_.size()));
    }
    Block b{seq, batch_digest, view, head(), proof};
    if (!proof_valid(b)) throw LedgerError(fmt::format("invalid certify proof for block {}", seq));
    blocks_.push_back(std::move(b));
    return blocks_.back();
}

void Ledger::truncate_to_count(std::size_t count) {
    if (count >= blocks_.size()) return;
    if (count < protected_) {
        throw LedgerError(fmt::format("truncate to {} blocks would cut below the stable prefix of {}", count,
                                      protected_));
    }
    blocks_.resize(count);
}

void Ledger::protect(std::size_t count) { protected_ = std::max(protected_, std::min(count, blocks_.size())); }

void Ledger::replace(std::vector<Block> blocks) {
    if (!poe::verify_chain(blocks, genesis_, auth_)) throw LedgerError("replacement chain does not verify");
    blocks_ = std::move(blocks);
    protected_ = std::min(protected_, blocks_.size());
}

bool Ledger::verify_chain() const { return poe::verify_chain(blocks_, genesis_, auth_); }

Digest Ledger::head() const { return blocks_.empty() ? genesis_ : blocks_.back().hash(); }

std::string Ledger::export_text() const {
    std::string out;
    for (const auto& b : blocks_) {
        out += to_hex(encode_block(b));
        out += '\n';
    }
    return out;
}

bool verify_chain(const std::vector<Block>& blocks, const Digest& genesis, const Authenticator* auth) {
    Digest prev = genesis;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const Block& b = blocks[i];
        if (b.seq != i || b.prev_hash != prev) return false;
        if (b.proof.seq != b.seq || b.proof.view != b.view) return false;
        if (auth && !auth->verify_threshold(b.proof.ts, certify_digest(b.seq, b.view, b.digest))) return false;
        prev = b.hash();
    }
    return true;
}

std::vector<Block> parse_ledger_export(const std::string& text) {
    std::vector<Block> blocks;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        blocks.push_back(decode_block(from_hex(line)));
    }
    return blocks;
}

LedgerDiff diff_ledgers(const std::vector<Block>& left, const std::vector<Block>& right) {
    LedgerDiff d;
    d.left_size = left.size();
    d.right_size = right.size();
    std::size_t limit = std::min(left.size(), right.size());
    while (d.common_prefix < limit && left[d.common_prefix].hash() == right[d.common_prefix].hash()) {
        ++d.common_prefix;
    }
    if (d.common_prefix < limit) {
        d.diverged = true;
        d.first_mismatch = d.common_prefix;
    }
    return d;
}

} // namespace poe
