// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace poe {

using ReplicaId = std::uint32_t;
using ClientId = std::uint32_t;
using View = std::uint64_t;
using SeqNum = std::uint64_t;
using SimTime = std::int64_t;
using Bytes = std::vector<std::uint8_t>;

/// Identity of a simulated endpoint. Replicas and clients live in separate
/// id spaces; the ordering (replicas first) is used as a deterministic
/// tiebreak by the simulator.
struct NodeId {
    enum class Kind : std::uint8_t { Replica = 0, Client = 1 };

    Kind kind = Kind::Replica;
    std::uint32_t index = 0;

    static constexpr NodeId replica(ReplicaId id) { return {Kind::Replica, id}; }
    static constexpr NodeId client(ClientId id) { return {Kind::Client, id}; }

    constexpr bool is_replica() const { return kind == Kind::Replica; }
    constexpr bool is_client() const { return kind == Kind::Client; }

    auto operator<=>(const NodeId&) const = default;

    std::string str() const;
    static NodeId parse(const std::string& text);
};

enum class Scheme : std::uint8_t { TS = 0, MAC = 1 };

std::string to_string(Scheme scheme);
Scheme parse_scheme(const std::string& text);

/// Identifies one client request independent of its content.
struct RequestId {
    ClientId client = 0;
    std::uint64_t nonce = 0;
    auto operator<=>(const RequestId&) const = default;
};

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class MalformedMessage : public Error {
  public:
    using Error::Error;
};

class ConfigInvalid : public Error {
  public:
    using Error::Error;
};

class InsufficientShares : public Error {
  public:
    using Error::Error;
};

class MixedDigests : public Error {
  public:
    using Error::Error;
};

class LedgerError : public Error {
  public:
    using Error::Error;
};

} // namespace poe
