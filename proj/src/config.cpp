// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "poe/config.hpp"

#include <fmt/format.h>

#include <charconv>

namespace poe {

std::string NodeId::str() const { return (is_replica() ? "r" : "c") + std::to_string(index); }

NodeId NodeId::parse(const std::string& text) {
    if (text.size() < 2 || (text[0] != 'r' && text[0] != 'c')) throw ConfigInvalid("bad node id: " + text);
    std::uint32_t index = 0;
    auto [ptr, ec] = std::from_chars(text.data() + 1, text.data() + text.size(), index);
    if (ec != std::errc{} || ptr != text.data() + text.size()) throw ConfigInvalid("bad node id: " + text);
    return text[0] == 'r' ? replica(index) : client(index);
}

std::string to_string(Scheme scheme) { return scheme == Scheme::TS ? "ts" : "mac"; }

Scheme parse_scheme(const std::string& text) {
    if (text == "ts" || text == "TS") return Scheme::TS;
    if (text == "mac" || text == "MAC") return Scheme::MAC;
    throw ConfigInvalid("unknown scheme '" + text + "' (expected ts or mac)");
}

void ReplicaConfig::validate() const {
    if (n <= 3 * f) throw ConfigInvalid(fmt::format("need n > 3f, got n={} f={}", n, f));
    if (nf() <= 2 * f) throw ConfigInvalid(fmt::format("need nf > 2f, got nf={} f={}", nf(), f));
    if (id >= n) throw ConfigInvalid(fmt::format("replica id {} out of range for n={}", id, n));
    if (watermark_window < 1) throw ConfigInvalid("watermark window must be at least 1");
    if (max_in_flight < 1) throw ConfigInvalid("max in-flight must be at least 1");
    if (checkpoint_interval < 1) throw ConfigInvalid("checkpoint interval must be at least 1");
    if (batch_size < 1) throw ConfigInvalid("batch size must be at least 1");
    if (timeout_base < 1) throw ConfigInvalid("timeout base must be positive");
    if (batch_flush < 0) throw ConfigInvalid("batch flush must be non-negative");
    if (timeout_cap_exponent > 40) throw ConfigInvalid("timeout cap exponent too large");
}

} // namespace poe
