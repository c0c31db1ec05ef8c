// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "poe/types.hpp"

#include <cstddef>
#include <cstdint>

namespace poe {

struct ReplicaConfig {
    ReplicaId id = 0;
    std::uint32_t n = 4;
    std::uint32_t f = 1;
    Scheme scheme = Scheme::TS;

    std::size_t batch_size = 1;
    SimTime batch_flush = 1; // a partial batch is proposed after this long

    /// Backups accept proposals for stable_count <= k < stable_count + W.
    std::size_t watermark_window = 250;
    /// The primary keeps at most this many proposed-but-unexecuted seqs
    /// outstanding; 1 makes consensus strictly sequential.
    std::size_t max_in_flight = 250;
    std::size_t checkpoint_interval = 100;

    SimTime timeout_base = 10;
    unsigned timeout_cap_exponent = 10;
    /// When false, no failure-detection timers are armed (message-delay
    /// throughput mode, which never changes views).
    bool failure_detection = true;

    std::size_t result_padding = 0;

    std::uint32_t nf() const { return n - f; }
    ReplicaId primary_of(View v) const { return static_cast<ReplicaId>(v % n); }

    /// Throws ConfigInvalid unless n > 3f, nf > 2f, W >= 1, C >= 1, B >= 1.
    void validate() const;
};

} // namespace poe
