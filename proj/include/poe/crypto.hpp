// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "poe/types.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace poe {

/// 32-byte SHA-256 output.
struct Digest {
    std::array<std::uint8_t, 32> bytes{};

    auto operator<=>(const Digest&) const = default;

    std::string hex() const;
    static Digest from_hex(std::string_view text);
};

Digest hash(std::span<const std::uint8_t> data);
Digest hash(std::string_view data);

/// Incremental SHA-256.
class Hasher {
  public:
    Hasher();
    ~Hasher();
    Hasher(const Hasher&) = delete;
    Hasher& operator=(const Hasher&) = delete;

    Hasher& update(std::span<const std::uint8_t> data);
    Hasher& update(std::string_view data);
    Hasher& update(const Digest& digest);
    Hasher& update_u64(std::uint64_t value);
    Digest finish();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct SignatureShare {
    ReplicaId signer = 0;
    Digest digest;
    Digest tag;
    auto operator<=>(const SignatureShare&) const = default;
};

struct ThresholdSignature {
    Digest digest;
    std::vector<ReplicaId> contributors; // strictly increasing
    Digest tag;
    auto operator<=>(const ThresholdSignature&) const = default;
};

struct ClientSignature {
    ClientId client = 0;
    Digest payload_digest;
    Digest tag;
    auto operator<=>(const ClientSignature&) const = default;
};

struct MacTag {
    NodeId sender;
    NodeId receiver;
    Digest tag;
    auto operator<=>(const MacTag&) const = default;
};

/// Transferable replica signature (vc-request and checkpoint messages).
struct ReplicaSignature {
    ReplicaId signer = 0;
    Digest tag;
    auto operator<=>(const ReplicaSignature&) const = default;
};

/// Authenticated-communication primitives. Implementations own every key in
/// the simulated system and double as the verification oracle; which keys a
/// caller may sign with is a trust-model discipline enforced by the simulator
/// (a node only signs as itself, an adversary only as the replicas it owns).
class Authenticator {
  public:
    virtual ~Authenticator() = default;

    /// Number of distinct shares required for a threshold signature (nf).
    virtual std::size_t threshold() const = 0;

    virtual SignatureShare sign_share(ReplicaId signer, const Digest& digest) const = 0;
    virtual bool verify_share(const SignatureShare& share) const = 0;

    /// Combines shares over one digest. Invalid shares and repeated signers
    /// are ignored; the lowest `threshold()` valid signers form the result.
    /// Throws MixedDigests when shares disagree on the digest and
    /// InsufficientShares when fewer than `threshold()` valid signers remain.
    virtual ThresholdSignature aggregate(std::span<const SignatureShare> shares) const = 0;
    virtual bool verify_threshold(const ThresholdSignature& ts, const Digest& digest) const = 0;

    virtual ClientSignature sign_client(ClientId client, const Digest& payload_digest) const = 0;
    virtual bool verify_client(const ClientSignature& sig) const = 0;

    virtual MacTag mac(NodeId sender, NodeId receiver, std::span<const std::uint8_t> data) const = 0;
    virtual bool verify_mac(const MacTag& tag, std::span<const std::uint8_t> data) const = 0;

    virtual ReplicaSignature sign(ReplicaId signer, const Digest& digest) const = 0;
    virtual bool verify(const ReplicaSignature& sig, const Digest& digest) const = 0;
};

/// Deterministic simulation-grade scheme: every tag is SHA-256 over a
/// per-node secret, a domain label, and the signed content. A threshold
/// signature is the hash of its nf (signer, share-tag) pairs in signer order.
class KeyedHashAuthenticator final : public Authenticator {
  public:
    KeyedHashAuthenticator(std::uint32_t n, std::size_t threshold, std::uint64_t seed);

    std::size_t threshold() const override { return threshold_; }

    SignatureShare sign_share(ReplicaId signer, const Digest& digest) const override;
    bool verify_share(const SignatureShare& share) const override;
    ThresholdSignature aggregate(std::span<const SignatureShare> shares) const override;
    bool verify_threshold(const ThresholdSignature& ts, const Digest& digest) const override;
    ClientSignature sign_client(ClientId client, const Digest& payload_digest) const override;
    bool verify_client(const ClientSignature& sig) const override;
    MacTag mac(NodeId sender, NodeId receiver, std::span<const std::uint8_t> data) const override;
    bool verify_mac(const MacTag& tag, std::span<const std::uint8_t> data) const override;
    ReplicaSignature sign(ReplicaId signer, const Digest& digest) const override;
    bool verify(const ReplicaSignature& sig, const Digest& digest) const override;

  private:
    Digest replica_key(ReplicaId id) const;
    Digest share_tag(ReplicaId signer, const Digest& digest) const;
    Digest combine(const ThresholdSignature& ts) const;

    std::uint32_t n_;
    std::size_t threshold_;
    std::uint64_t seed_;
    std::vector<Digest> replica_keys_;
};

/// Accepts everything and computes nothing; used by the message-delay
/// throughput mode where only message rounds matter.
class NullAuthenticator final : public Authenticator {
  public:
    explicit NullAuthenticator(std::size_t threshold) : threshold_(threshold) {}

    std::size_t threshold() const override { return threshold_; }

    SignatureShare sign_share(ReplicaId signer, const Digest& digest) const override;
    bool verify_share(const SignatureShare&) const override { return true; }
    ThresholdSignature aggregate(std::span<const SignatureShare> shares) const override;
    bool verify_threshold(const ThresholdSignature& ts, const Digest& digest) const override;
    ClientSignature sign_client(ClientId client, const Digest& payload_digest) const override;
    bool verify_client(const ClientSignature&) const override { return true; }
    MacTag mac(NodeId sender, NodeId receiver, std::span<const std::uint8_t>) const override;
    bool verify_mac(const MacTag&, std::span<const std::uint8_t>) const override { return true; }
    ReplicaSignature sign(ReplicaId signer, const Digest&) const override;
    bool verify(const ReplicaSignature&, const Digest&) const override { return true; }

  private:
    std::size_t threshold_;
};

} // namespace poe
