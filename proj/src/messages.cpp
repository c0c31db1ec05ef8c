// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "poe/messages.hpp"

#include "poe/codec.hpp"

#include <type_traits>

namespace poe {

namespace {

enum Tag : std::uint8_t {
    kRequest = 1,
    kPropose = 2,
    kSupport = 3,
    kCertify = 4,
    kInform = 5,
    kVcRequest = 6,
    kNvPropose = 7,
    kCheckpoint = 8,
    kStateRequest = 9,
    kStateReply = 10,
};

// Minimum encoded sizes, used to reject absurd element counts early.
constexpr std::size_t kMinTxnSize = 3 + 32;
constexpr std::size_t kMinEntrySize = 32;

void put(ByteWriter& w, const ThresholdSignature& ts) {
    w.digest(ts.digest);
    w.varint(ts.contributors.size());
    for (ReplicaId id : ts.contributors) w.varint(id);
    w.digest(ts.tag);
}

ThresholdSignature get_ts(ByteReader& r) {
    ThresholdSignature ts;
    ts.digest = r.digest();
    std::size_t n = r.count(1);
    ts.contributors.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ts.contributors.push_back(r.varint32());
    ts.tag = r.digest();
    return ts;
}

void put(ByteWriter& w, const SignatureShare& s) {
    w.varint(s.signer);
    w.digest(s.digest);
    w.digest(s.tag);
}

SignatureShare get_share(ByteReader& r) {
    SignatureShare s;
    s.signer = r.varint32();
    s.digest = r.digest();
    s.tag = r.digest();
    return s;
}

void put(ByteWriter& w, const ReplicaSignature& s) {
    w.varint(s.signer);
    w.digest(s.tag);
}

ReplicaSignature get_sig(ByteReader& r) {
    ReplicaSignature s;
    s.signer = r.varint32();
    s.tag = r.digest();
    return s;
}

// The client signature's client and payload digest are implied by the
// transaction itself, so only the tag goes on the wire.
void put(ByteWriter& w, const SignedTransaction& t) {
    w.varint(t.client);
    w.varint(t.nonce);
    w.bytes(t.payload);
    w.digest(t.sig.tag);
}

SignedTransaction get_txn(ByteReader& r) {
    SignedTransaction t;
    t.client = r.varint32();
    t.nonce = r.varint();
    t.payload = r.bytes();
    t.sig.client = t.client;
    t.sig.payload_digest = SignedTransaction::payload_digest(t.client, t.nonce, t.payload);
    t.sig.tag = r.digest();
    return t;
}

void put(ByteWriter& w, const Batch& b) {
    w.varint(b.requests.size());
    for (const auto& t : b.requests) put(w, t);
}

Batch get_batch(ByteReader& r) {
    std::size_t n = r.count(kMinTxnSize);
    std::vector<SignedTransaction> requests;
    requests.reserve(n);
    for (std::size_t i = 0; i < n; ++i) requests.push_back(get_txn(r));
    return Batch::make(std::move(requests));
}

void put(ByteWriter& w, const CertifyMsg& m) {
    w.varint(m.view);
    w.varint(m.seq);
    put(w, m.ts);
}

CertifyMsg get_certify(ByteReader& r) {
    CertifyMsg m;
    m.view = r.varint();
    m.seq = r.varint();
    m.ts = get_ts(r);
    return m;
}

void put(ByteWriter& w, const CheckpointMsg& m, bool with_sig = true) {
    w.varint(m.seq);
    w.digest(m.state_digest);
    w.digest(m.ledger_digest);
    if (with_sig) put(w, m.sig);
}

CheckpointMsg get_checkpoint(ByteReader& r) {
    CheckpointMsg m;
    m.seq = r.varint();
    m.state_digest = r.digest();
    m.ledger_digest = r.digest();
    m.sig = get_sig(r);
    return m;
}

void put(ByteWriter& w, const CheckpointCertificate& c) {
    w.varint(c.seq);
    w.digest(c.state_digest);
    w.digest(c.ledger_digest);
    w.varint(c.votes.size());
    for (const auto& v : c.votes) put(w, v);
}

CheckpointCertificate get_certificate(ByteReader& r) {
    CheckpointCertificate c;
    c.seq = r.varint();
    c.state_digest = r.digest();
    c.ledger_digest = r.digest();
    std::size_t n = r.count(kMinEntrySize);
    c.votes.reserve(n);
    for (std::size_t i = 0; i < n; ++i) c.votes.push_back(get_checkpoint(r));
    return c;
}

bool get_flag(ByteReader& r) {
    std::uint8_t b = r.u8();
    if (b > 1) throw MalformedMessage("invalid boolean flag");
    return b == 1;
}

void put(ByteWriter& w, const VcRequestMsg& m, bool with_sig = true) {
    w.varint(m.view);
    w.varint(m.entered_view);
    w.u8(m.checkpoint ? 1 : 0);
    if (m.checkpoint) put(w, *m.checkpoint);
    w.varint(m.history.size());
    for (const auto& e : m.history) {
        put(w, e.proof);
        put(w, e.batch);
    }
    if (with_sig) put(w, m.sig);
}

VcRequestMsg get_vc_request(ByteReader& r) {
    VcRequestMsg m;
    m.view = r.varint();
    m.entered_view = r.varint();
    if (get_flag(r)) m.checkpoint = get_certificate(r);
    std::size_t n = r.count(kMinEntrySize);
    m.history.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        HistoryEntry e;
        e.proof = get_certify(r);
        e.batch = get_batch(r);
        m.history.push_back(std::move(e));
    }
    m.sig = get_sig(r);
    return m;
}

void put_header(ByteWriter& w, const Block& b) {
    w.varint(b.seq);
    w.digest(b.digest);
    w.varint(b.view);
    w.digest(b.prev_hash);
}

void put(ByteWriter& w, const Block& b) {
    put_header(w, b);
    put(w, b.proof);
}

Block get_block(ByteReader& r) {
    Block b;
    b.seq = r.varint();
    b.digest = r.digest();
    b.view = r.varint();
    b.prev_hash = r.digest();
    b.proof = get_certify(r);
    return b;
}

void put(ByteWriter& w, const StateSnapshot& s) {
    w.varint(s.kv.size());
    for (const auto& [key, value] : s.kv) {
        w.str(key);
        w.bytes(value);
    }
    w.varint(s.executed.size());
    for (const auto& [id, rec] : s.executed) {
        w.varint(id.client);
        w.varint(id.nonce);
        w.varint(rec.seq);
        w.varint(rec.view);
        w.digest(rec.txn_digest);
        w.digest(rec.batch_digest);
        w.bytes(rec.result);
    }
}

StateSnapshot get_snapshot(ByteReader& r) {
    StateSnapshot s;
    std::size_t n = r.count(2);
    s.kv.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::string key = r.str();
        Bytes value = r.bytes();
        s.kv.emplace_back(std::move(key), std::move(value));
    }
    n = r.count(kMinEntrySize);
    s.executed.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RequestId id;
        id.client = r.varint32();
        id.nonce = r.varint();
        ExecutionRecord rec;
        rec.seq = r.varint();
        rec.view = r.varint();
        rec.txn_digest = r.digest();
        rec.batch_digest = r.digest();
        rec.result = r.bytes();
        s.executed.emplace_back(id, std::move(rec));
    }
    return s;
}

} // namespace

// ---------------------------------------------------------------------------

Bytes Command::encode() const {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(op));
    w.str(key);
    w.bytes(value);
    w.bytes(padding);
    return w.take();
}

Command Command::decode(std::span<const std::uint8_t> data) {
    ByteReader r(data);
    Command c;
    std::uint8_t op = r.u8();
    if (op != static_cast<std::uint8_t>(OpKind::Put) && op != static_cast<std::uint8_t>(OpKind::Get)) {
        throw MalformedMessage("unknown command op");
    }
    c.op = static_cast<OpKind>(op);
    c.key = r.str();
    c.value = r.bytes();
    c.padding = r.bytes();
    r.expect_done();
    return c;
}

Digest SignedTransaction::payload_digest(ClientId client, std::uint64_t nonce,
                                         std::span<const std::uint8_t> payload) {
    return Hasher().update("poe/txn").update_u64(client).update_u64(nonce).update(payload).finish();
}

SignedTransaction SignedTransaction::make(const Authenticator& auth, ClientId client, std::uint64_t nonce,
                                          Bytes payload) {
    SignedTransaction t;
    t.client = client;
    t.nonce = nonce;
    t.payload = std::move(payload);
    t.sig = auth.sign_client(client, payload_digest(client, nonce, t.payload));
    return t;
}

bool SignedTransaction::verify(const Authenticator& auth) const {
    return sig.client == client && sig.payload_digest == payload_digest(client, nonce, payload) &&
           auth.verify_client(sig);
}

Digest SignedTransaction::digest() const {
    ByteWriter w;
    put(w, *this);
    return hash(w.data());
}

Digest Batch::compute_digest(std::span<const SignedTransaction> requests) {
    ByteWriter w;
    for (const auto& t : requests) put(w, t);
    return hash(w.data());
}

Batch Batch::make(std::vector<SignedTransaction> requests) {
    Batch b;
    b.digest = compute_digest(requests);
    b.requests = std::move(requests);
    return b;
}

Digest certify_digest(SeqNum seq, View view, const Digest& batch_digest) {
    return Hasher().update_u64(seq).update_u64(view).update(batch_digest).finish();
}

Digest Block::hash() const {
    ByteWriter w;
    put_header(w, *this);
    return poe::hash(w.data());
}

std::string_view message_name(const Message& msg) {
    static constexpr std::string_view names[] = {"request",    "propose",      "support",  "certify",
                                                 "inform",     "vc_request",   "nv_propose", "checkpoint",
                                                 "state_request", "state_reply"};
    return names[msg.index()];
}

Bytes encode(const Message& msg) {
    ByteWriter w;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, RequestMsg>) {
                w.u8(kRequest);
                put(w, m.txn);
            } else if constexpr (std::is_same_v<T, ProposeMsg>) {
                w.u8(kPropose);
                w.varint(m.view);
                w.varint(m.seq);
                put(w, m.batch);
            } else if constexpr (std::is_same_v<T, SupportMsg>) {
                w.u8(kSupport);
                w.varint(m.view);
                w.varint(m.seq);
                put(w, m.share);
            } else if constexpr (std::is_same_v<T, CertifyMsg>) {
                w.u8(kCertify);
                put(w, m);
            } else if constexpr (std::is_same_v<T, InformMsg>) {
                w.u8(kInform);
                w.varint(m.view);
                w.varint(m.seq);
                w.digest(m.txn_digest);
                w.digest(m.batch_digest);
                w.bytes(m.result);
            } else if constexpr (std::is_same_v<T, VcRequestMsg>) {
                w.u8(kVcRequest);
                put(w, m);
            } else if constexpr (std::is_same_v<T, NvProposeMsg>) {
                w.u8(kNvPropose);
                w.varint(m.new_view);
                w.varint(m.proofs.size());
                for (const auto& p : m.proofs) put(w, p);
            } else if constexpr (std::is_same_v<T, CheckpointMsg>) {
                w.u8(kCheckpoint);
                put(w, m);
            } else if constexpr (std::is_same_v<T, StateRequestMsg>) {
                w.u8(kStateRequest);
                w.varint(m.seq);
            } else if constexpr (std::is_same_v<T, StateReplyMsg>) {
                w.u8(kStateReply);
                put(w, m.certificate);
                put(w, m.snapshot);
                w.varint(m.blocks.size());
                for (const auto& b : m.blocks) put(w, b);
            }
        },
        msg);
    return w.take();
}

Message decode(std::span<const std::uint8_t> data) {
    ByteReader r(data);
    Message out;
    switch (r.u8()) {
    case kRequest:
        out = RequestMsg{get_txn(r)};
        break;
    case kPropose: {
        ProposeMsg m;
        m.view = r.varint();
        m.seq = r.varint();
        m.batch = get_batch(r);
        out = std::move(m);
        break;
    }
    case kSupport: {
        SupportMsg m;
        m.view = r.varint();
        m.seq = r.varint();
        m.share = get_share(r);
        out = m;
        break;
    }
    case kCertify:
        out = get_certify(r);
        break;
    case kInform: {
        InformMsg m;
        m.view = r.varint();
        m.seq = r.varint();
        m.txn_digest = r.digest();
        m.batch_digest = r.digest();
        m.result = r.bytes();
        out = std::move(m);
        break;
    }
    case kVcRequest:
        out = get_vc_request(r);
        break;
    case kNvPropose: {
        NvProposeMsg m;
        m.new_view = r.varint();
        std::size_t n = r.count(kMinEntrySize);
        m.proofs.reserve(n);
        for (std::size_t i = 0; i < n; ++i) m.proofs.push_back(get_vc_request(r));
        out = std::move(m);
        break;
    }
    case kCheckpoint:
        out = get_checkpoint(r);
        break;
    case kStateRequest:
        out = StateRequestMsg{r.varint()};
        break;
    case kStateReply: {
        StateReplyMsg m;
        m.certificate = get_certificate(r);
        m.snapshot = get_snapshot(r);
        std::size_t n = r.count(kMinEntrySize);
        m.blocks.reserve(n);
        for (std::size_t i = 0; i < n; ++i) m.blocks.push_back(get_block(r));
        out = std::move(m);
        break;
    }
    default:
        throw MalformedMessage("unknown message tag");
    }
    r.expect_done();
    return out;
}

Bytes encode_block(const Block& block) {
    ByteWriter w;
    put(w, block);
    return w.take();
}

Block decode_block(std::span<const std::uint8_t> data) {
    ByteReader r(data);
    Block b = get_block(r);
    r.expect_done();
    return b;
}

Digest signing_digest(const VcRequestMsg& msg) {
    ByteWriter w;
    w.str("poe/vc-request");
    put(w, msg, false);
    return hash(w.data());
}

Digest signing_digest(const CheckpointMsg& msg) {
    ByteWriter w;
    w.str("poe/checkpoint");
    put(w, msg, false);
    return hash(w.data());
}

} // namespace poe
