// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "poe/crypto.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <set>

namespace poe {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

void update_node(Hasher& h, NodeId node) {
    h.update_u64((static_cast<std::uint64_t>(node.kind) << 32) | node.index);
}

} // namespace

std::string Digest::hex() const {
    std::string out;
    out.reserve(64);
    for (auto b : bytes) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0xf]);
    }
    return out;
}

Digest Digest::from_hex(std::string_view text) {
    if (text.size() != 64) throw MalformedMessage("digest hex must be 64 characters");
    Digest d;
    for (std::size_t i = 0; i < 32; ++i) {
        int hi = hex_value(text[2 * i]);
        int lo = hex_value(text[2 * i + 1]);
        if (hi < 0 || lo < 0) throw MalformedMessage("invalid hex digit in digest");
        d.bytes[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return d;
}

Digest hash(std::span<const std::uint8_t> data) {
    Digest d;
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), d.bytes.data(), &len, EVP_sha256(), nullptr);
    return d;
}

Digest hash(std::string_view data) {
    return hash(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

struct Hasher::Impl {
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    ~Impl() { EVP_MD_CTX_free(ctx); }
};

Hasher::Hasher() : impl_(std::make_unique<Impl>()) {
    EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr);
}

Hasher::~Hasher() = default;

Hasher& Hasher::update(std::span<const std::uint8_t> data) {
    EVP_DigestUpdate(impl_->ctx, data.data(), data.size());
    return *this;
}

Hasher& Hasher::update(std::string_view data) {
    EVP_DigestUpdate(impl_->ctx, data.data(), data.size());
    return *this;
}

Hasher& Hasher::update(const Digest& digest) { return update(std::span(digest.bytes)); }

Hasher& Hasher::update_u64(std::uint64_t value) {
    std::array<std::uint8_t, 8> buf{};
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<std::uint8_t>(value >> (56 - 8 * i));
    return update(std::span(buf));
}

Digest Hasher::finish() {
    Digest d;
    unsigned int len = 0;
    EVP_DigestFinal_ex(impl_->ctx, d.bytes.data(), &len);
    EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr);
    return d;
}

// ---------------------------------------------------------------------------
// KeyedHashAuthenticator

KeyedHashAuthenticator::KeyedHashAuthenticator(std::uint32_t n, std::size_t threshold,
                                               std::uint64_t seed)
    : n_(n), threshold_(threshold), seed_(seed) {
    replica_keys_.reserve(n);
    for (ReplicaId id = 0; id < n; ++id) {
        replica_keys_.push_back(Hasher().update("poe/replica-key").update_u64(seed).update_u64(id).finish());
    }
}

Digest KeyedHashAuthenticator::replica_key(ReplicaId id) const {
    if (id < replica_keys_.size()) return replica_keys_[id];
    // Ids outside the membership get a key nobody else can reproduce either,
    // so their shares never count.
    return Hasher().update("poe/foreign-key").update_u64(seed_).update_u64(id).finish();
}

Digest KeyedHashAuthenticator::share_tag(ReplicaId signer, const Digest& digest) const {
    return Hasher().update(replica_key(signer)).update("share").update(digest).finish();
}

SignatureShare KeyedHashAuthenticator::sign_share(ReplicaId signer, const Digest& digest) const {
    return {signer, digest, share_tag(signer, digest)};
}

bool KeyedHashAuthenticator::verify_share(const SignatureShare& share) const {
    return share.signer < n_ && share.tag == share_tag(share.signer, share.digest);
}

Digest KeyedHashAuthenticator::combine(const ThresholdSignature& ts) const {
    Hasher h;
    h.update("poe/threshold").update(ts.digest);
    for (ReplicaId id : ts.contributors) h.update_u64(id).update(share_tag(id, ts.digest));
    return h.finish();
}

ThresholdSignature KeyedHashAuthenticator::aggregate(std::span<const SignatureShare> shares) const {
    if (shares.empty()) throw InsufficientShares("no shares to aggregate");
    const Digest& digest = shares.front().digest;
    std::set<ReplicaId> signers;
    for (const auto& share : shares) {
        if (share.digest != digest) throw MixedDigests("shares disagree on the signed digest");
        if (verify_share(share)) signers.insert(share.signer);
    }
    if (signers.size() < threshold_) {
        throw InsufficientShares("have " + std::to_string(signers.size()) + " distinct valid signers, need " +
                                 std::to_string(threshold_));
    }
    ThresholdSignature ts;
    ts.digest = digest;
    ts.contributors.assign(signers.begin(), std::next(signers.begin(), static_cast<long>(threshold_)));
    ts.tag = combine(ts);
    return ts;
}

bool KeyedHashAuthenticator::verify_threshold(const ThresholdSignature& ts, const Digest& digest) const {
    if (ts.digest != digest || ts.contributors.size() != threshold_) return false;
    for (std::size_t i = 0; i < ts.contributors.size(); ++i) {
        if (ts.contributors[i] >= n_) return false;
        if (i > 0 && ts.contributors[i] <= ts.contributors[i - 1]) return false;
    }
    return ts.tag == combine(ts);
}

ClientSignature KeyedHashAuthenticator::sign_client(ClientId client, const Digest& payload_digest) const {
    Digest tag = Hasher()
                     .update("poe/client-key")
                     .update_u64(seed_)
                     .update_u64(client)
                     .update(payload_digest)
                     .finish();
    return {client, payload_digest, tag};
}

bool KeyedHashAuthenticator::verify_client(const ClientSignature& sig) const {
    return sign_client(sig.client, sig.payload_digest).tag == sig.tag;
}

MacTag KeyedHashAuthenticator::mac(NodeId sender, NodeId receiver, std::span<const std::uint8_t> data) const {
    // Pairwise secret: symmetric in the two endpoints.
    NodeId lo = std::min(sender, receiver);
    NodeId hi = std::max(sender, receiver);
    Hasher key;
    key.update("poe/mac-key").update_u64(seed_);
    update_node(key, lo);
    update_node(key, hi);
    Digest pair_key = key.finish();

    Hasher h;
    h.update(pair_key);
    update_node(h, sender);
    update_node(h, receiver);
    h.update(data);
    return {sender, receiver, h.finish()};
}

bool KeyedHashAuthenticator::verify_mac(const MacTag& tag, std::span<const std::uint8_t> data) const {
    return mac(tag.sender, tag.receiver, data).tag == tag.tag;
}

ReplicaSignature KeyedHashAuthenticator::sign(ReplicaId signer, const Digest& digest) const {
    return {signer, Hasher().update(replica_key(signer)).update("sign").update(digest).finish()};
}

bool KeyedHashAuthenticator::verify(const ReplicaSignature& sig, const Digest& digest) const {
    return sig.signer < n_ && sign(sig.signer, digest).tag == sig.tag;
}

// ---------------------------------------------------------------------------
// NullAuthenticator

SignatureShare NullAuthenticator::sign_share(ReplicaId signer, const Digest& digest) const {
    return {signer, digest, Digest{}};
}

ThresholdSignature NullAuthenticator::aggregate(std::span<const SignatureShare> shares) const {
    if (shares.empty()) throw InsufficientShares("no shares to aggregate");
    std::set<ReplicaId> signers;
    for (const auto& share : shares) {
        if (share.digest != shares.front().digest) throw MixedDigests("shares disagree on the signed digest");
        signers.insert(share.signer);
    }
    if (signers.size() < threshold_) throw InsufficientShares("not enough distinct signers");
    ThresholdSignature ts;
    ts.digest = shares.front().digest;
    ts.contributors.assign(signers.begin(), std::next(signers.begin(), static_cast<long>(threshold_)));
    return ts;
}

bool NullAuthenticator::verify_threshold(const ThresholdSignature& ts, const Digest& digest) const {
    return ts.digest == digest && ts.contributors.size() == threshold_;
}

ClientSignature NullAuthenticator::sign_client(ClientId client, const Digest& payload_digest) const {
    return {client, payload_digest, Digest{}};
}

MacTag NullAuthenticator::mac(NodeId sender, NodeId receiver, std::span<const std::uint8_t>) const {
    return {sender, receiver, Digest{}};
}

ReplicaSignature NullAuthenticator::sign(ReplicaId signer, const Digest&) const { return {signer, Digest{}}; }

} // namespace poe
