// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

namespace poe {

/// Seeded generator with platform-independent derived draws. The standard
/// distributions are implementation-defined, so they are avoided here to
/// keep traces identical across standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) : engine_(seed ^ (stream * 0x9e3779b97f4a7c15ULL)) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [lo, hi]. Modulo bias is irrelevant at simulation ranges.
    std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
        if (hi <= lo) return lo;
        auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next() % span);
    }

    std::size_t index(std::size_t size) { return size == 0 ? 0 : static_cast<std::size_t>(next() % size); }

    /// Uniform in [0, 1).
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool chance(double p) { return p > 0 && unit() < p; }

  private:
    std::mt19937_64 engine_;
};

} // namespace poe
