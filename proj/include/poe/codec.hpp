// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "poe/crypto.hpp"
#include "poe/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace poe {

/// Canonical binary writer: LEB128 varints (minimal form only), length
/// prefixed byte strings, raw 32-byte digests.
class ByteWriter {
  public:
    void u8(std::uint8_t value) { buf_.push_back(value); }
    void varint(std::uint64_t value);
    void bytes(std::span<const std::uint8_t> data);
    void str(std::string_view text);
    void digest(const Digest& d);
    void raw(std::span<const std::uint8_t> data) { buf_.insert(buf_.end(), data.begin(), data.end()); }

    const Bytes& data() const { return buf_; }
    Bytes take() { return std::move(buf_); }

  private:
    Bytes buf_;
};

/// Bounds-checked counterpart of ByteWriter; every failure is MalformedMessage.
class ByteReader {
  public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8();
    std::uint64_t varint();
    std::uint32_t varint32();
    Bytes bytes();
    std::string str();
    Digest digest();

    /// Reads a count prefix and rejects counts that cannot possibly fit in the
    /// remaining input (each element is at least `min_element_size` bytes).
    std::size_t count(std::size_t min_element_size = 1);

    bool done() const { return pos_ == data_.size(); }
    void expect_done() const;

  private:
    void need(std::size_t n) const;

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

std::string to_hex(std::span<const std::uint8_t> data);
Bytes from_hex(std::string_view text);

} // namespace poe
