// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "poe/crypto.hpp"
#include "poe/types.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace poe {

// ---------------------------------------------------------------------------
// Client payload

enum class OpKind : std::uint8_t { Put = 1, Get = 2 };

/// A single keyed datastore operation. `padding` is carried but ignored by
/// execution; the workload uses it to reach realistic message sizes.
struct Command {
    OpKind op = OpKind::Get;
    std::string key;
    Bytes value;
    Bytes padding;

    bool operator==(const Command&) const = default;

    Bytes encode() const;
    static Command decode(std::span<const std::uint8_t> data);
};

struct SignedTransaction {
    ClientId client = 0;
    std::uint64_t nonce = 0;
    Bytes payload;
    ClientSignature sig;

    bool operator==(const SignedTransaction&) const = default;

    RequestId id() const { return {client, nonce}; }

    /// Digest the client signs: binds client, nonce and payload.
    static Digest payload_digest(ClientId client, std::uint64_t nonce, std::span<const std::uint8_t> payload);
    static SignedTransaction make(const Authenticator& auth, ClientId client, std::uint64_t nonce, Bytes payload);

    bool verify(const Authenticator& auth) const;

    /// Hash of the canonical encoding; what informs refer to.
    Digest digest() const;
};

struct Batch {
    std::vector<SignedTransaction> requests;
    Digest digest; // hash over the concatenated canonical request encodings

    bool operator==(const Batch&) const = default;

    static Batch make(std::vector<SignedTransaction> requests);
    static Digest compute_digest(std::span<const SignedTransaction> requests);
};

/// h = hash(k || v || batch digest), the value every support share signs.
Digest certify_digest(SeqNum seq, View view, const Digest& batch_digest);

// ---------------------------------------------------------------------------
// Protocol messages

struct RequestMsg {
    SignedTransaction txn;
    bool operator==(const RequestMsg&) const = default;
};

struct ProposeMsg {
    View view = 0;
    SeqNum seq = 0;
    Batch batch;
    bool operator==(const ProposeMsg&) const = default;
};

struct SupportMsg {
    View view = 0;
    SeqNum seq = 0;
    SignatureShare share;
    bool operator==(const SupportMsg&) const = default;
};

struct CertifyMsg {
    View view = 0;
    SeqNum seq = 0;
    ThresholdSignature ts;
    bool operator==(const CertifyMsg&) const = default;
};

/// The transferable evidence of a view-commit has the same shape as the
/// certify message that delivers it.
using CertifyProof = CertifyMsg;

struct InformMsg {
    View view = 0;
    SeqNum seq = 0;
    Digest txn_digest;
    Digest batch_digest;
    Bytes result;
    bool operator==(const InformMsg&) const = default;
};

struct CheckpointMsg {
    SeqNum seq = 0;
    Digest state_digest;
    Digest ledger_digest;
    ReplicaSignature sig;
    bool operator==(const CheckpointMsg&) const = default;

    ReplicaId signer() const { return sig.signer; }
};

struct CheckpointCertificate {
    SeqNum seq = 0;
    Digest state_digest;
    Digest ledger_digest;
    std::vector<CheckpointMsg> votes; // distinct signers, ascending
    bool operator==(const CheckpointCertificate&) const = default;
};

struct HistoryEntry {
    CertifyProof proof;
    Batch batch;
    bool operator==(const HistoryEntry&) const = default;
};

struct VcRequestMsg {
    View view = 0;         // the view being abandoned
    View entered_view = 0; // last view whose new-view the signer installed
    std::optional<CheckpointCertificate> checkpoint;
    std::vector<HistoryEntry> history; // consecutive, starting after the checkpoint
    ReplicaSignature sig;
    bool operator==(const VcRequestMsg&) const = default;

    ReplicaId signer() const { return sig.signer; }
    SeqNum first_seq() const { return checkpoint ? checkpoint->seq + 1 : 0; }
    SeqNum end_seq() const { return first_seq() + history.size(); }
};

struct NvProposeMsg {
    View new_view = 0;
    std::vector<VcRequestMsg> proofs;
    bool operator==(const NvProposeMsg&) const = default;
};

/// Ledger block. The chained identity is the header (seq, digest, view,
/// prev_hash); the proof travels with the block but is not hashed, since
/// honest replicas may hold different but equally valid proofs for the
/// same header.
struct Block {
    SeqNum seq = 0;
    Digest digest;
    View view = 0;
    Digest prev_hash;
    CertifyProof proof;
    bool operator==(const Block&) const = default;

    Digest hash() const;
};

/// Result of executing one request, kept for duplicate suppression and
/// inform re-sends.
struct ExecutionRecord {
    SeqNum seq = 0;
    View view = 0;
    Digest txn_digest;
    Digest batch_digest;
    Bytes result;
    bool operator==(const ExecutionRecord&) const = default;
};

struct StateSnapshot {
    std::vector<std::pair<std::string, Bytes>> kv; // sorted by key
    std::vector<std::pair<RequestId, ExecutionRecord>> executed; // sorted by id
    bool operator==(const StateSnapshot&) const = default;
};

struct StateRequestMsg {
    SeqNum seq = 0; // stable checkpoint the requester wants to reach
    bool operator==(const StateRequestMsg&) const = default;
};

struct StateReplyMsg {
    CheckpointCertificate certificate;
    StateSnapshot snapshot;
    std::vector<Block> blocks; // full chain 0..certificate.seq
    bool operator==(const StateReplyMsg&) const = default;
};

using Message = std::variant<RequestMsg, ProposeMsg, SupportMsg, CertifyMsg, InformMsg, VcRequestMsg,
                             NvProposeMsg, CheckpointMsg, StateRequestMsg, StateReplyMsg>;

std::string_view message_name(const Message& msg);

Bytes encode(const Message& msg);
Message decode(std::span<const std::uint8_t> data);

Bytes encode_block(const Block& block);
Block decode_block(std::span<const std::uint8_t> data);

/// Digests covered by replica signatures (the message minus its signature).
Digest signing_digest(const VcRequestMsg& msg);
Digest signing_digest(const CheckpointMsg& msg);

} // namespace poe
