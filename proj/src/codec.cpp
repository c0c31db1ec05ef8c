// Copyright 2026 The poe-sim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "poe/codec.hpp"

#include <limits>

namespace poe {

void ByteWriter::varint(std::uint64_t value) {
    while (value >= 0x80) {
        buf_.push_back(static_cast<std::uint8_t>(value | 0x80));
        value >>= 7;
    }
    buf_.push_back(static_cast<std::uint8_t>(value));
}

void ByteWriter::bytes(std::span<const std::uint8_t> data) {
    varint(data.size());
    raw(data);
}

void ByteWriter::str(std::string_view text) {
    varint(text.size());
    buf_.insert(buf_.end(), text.begin(), text.end());
}

void ByteWriter::digest(const Digest& d) { raw(std::span(d.bytes)); }

void ByteReader::need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw MalformedMessage("truncated input");
}

std::uint8_t ByteReader::u8() {
    need(1);
    return data_[pos_++];
}

std::uint64_t ByteReader::varint() {
    std::uint64_t value = 0;
    for (int shift = 0; shift < 64; shift += 7) {
        std::uint8_t byte = u8();
        if (shift == 63 && byte > 1) throw MalformedMessage("varint overflow");
        value |= static_cast<std::uint64_t>(byte & 0x7f) << shift;
        if ((byte & 0x80) == 0) {
            if (byte == 0 && shift > 0) throw MalformedMessage("non-minimal varint");
            return value;
        }
    }
    throw MalformedMessage("varint too long");
}

std::uint32_t ByteReader::varint32() {
    std::uint64_t v = varint();
    if (v > std::numeric_limits<std::uint32_t>::max()) throw MalformedMessage("value exceeds 32 bits");
    return static_cast<std::uint32_t>(v);
}

std::size_t ByteReader::count(std::size_t min_element_size) {
    std::uint64_t n = varint();
    if (min_element_size > 0 && n > (data_.size() - pos_) / min_element_size) {
        throw MalformedMessage("element count exceeds remaining input");
    }
    return static_cast<std::size_t>(n);
}

Bytes ByteReader::bytes() {
    std::size_t n = count(1);
    need(n);
    Bytes out(data_.begin() + static_cast<long>(pos_), data_.begin() + static_cast<long>(pos_ + n));
    pos_ += n;
    return out;
}

std::string ByteReader::str() {
    std::size_t n = count(1);
    need(n);
    std::string out(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return out;
}

Digest ByteReader::digest() {
    need(32);
    Digest d;
    std::copy_n(data_.begin() + static_cast<long>(pos_), 32, d.bytes.begin());
    pos_ += 32;
    return d;
}

void ByteReader::expect_done() const {
    if (!done()) throw MalformedMessage("trailing bytes after message");
}

std::string to_hex(std::span<const std::uint8_t> data) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

Bytes from_hex(std::string_view text) {
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw MalformedMessage("invalid hex digit");
    };
    if (text.size() % 2 != 0) throw MalformedMessage("odd-length hex string");
    Bytes out(text.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<std::uint8_t>((nibble(text[2 * i]) << 4) | nibble(text[2 * i + 1]));
    }
    return out;
}

} // namespace poe
