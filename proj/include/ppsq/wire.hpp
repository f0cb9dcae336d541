// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

// Byte layout of a PPS message:
//
//   [u8 flags][f pos_mass][f neg_mass][varint count][packed indices]
//
// little-endian, f is a 32- or 64-bit IEEE float. Masses that are not
// transmitted (see QuantizedGradient::transmitted_masses) are omitted.
// `count` is the number of indices per present part. Indices are packed
// LSB-first with ceil(log2 dim) bits each, positive part first; the last
// byte is zero-padded. The receiver knows `dim`.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

#include "ppsq/quantize.hpp"

namespace ppsq::wire {

enum Flags : std::uint8_t {
  kHasPos = 1u << 0,
  kHasNeg = 1u << 1,
  kSimplified = 1u << 2,
  kFloat32 = 1u << 3,
  kUnitMass = 1u << 4,
};

class BitWriter {
 public:
  void put_byte(std::uint8_t b) {
    align();
    bytes_.push_back(b);
  }

  void put_bits(std::uint64_t value, int width) {
    for (int i = 0; i < width; ++i) {
      if (bit_ == 0) bytes_.push_back(0);
      if ((value >> i) & 1u)
        bytes_.back() |= static_cast<std::uint8_t>(1u << bit_);
      bit_ = (bit_ + 1) & 7;
    }
  }

  void align() { bit_ = 0; }

  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
  int bit_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t get_byte() {
    align();
    require(pos_ < bytes_.size(), "wire: truncated message");
    return bytes_[pos_++];
  }

  std::uint64_t get_bits(int width) {
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      require(pos_ < bytes_.size(), "wire: truncated message");
      if ((bytes_[pos_] >> bit_) & 1u) v |= std::uint64_t{1} << i;
      if (++bit_ == 8) {
        bit_ = 0;
        ++pos_;
      }
    }
    return v;
  }

  void align() {
    if (bit_ != 0) {
      bit_ = 0;
      ++pos_;
    }
  }

  std::size_t consumed() const { return pos_ + (bit_ != 0 ? 1 : 0); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  int bit_ = 0;
};

struct Encoded {
  std::vector<std::uint8_t> bytes;
  std::uint64_t payload_bits = 0;  // masses + indices, exactly as written
  std::size_t framing_bytes = 0;   // flags byte + varint
};

namespace detail {

inline std::size_t put_varint(BitWriter& w, std::uint64_t v) {
  std::size_t n = 0;
  do {
    std::uint8_t b = v & 0x7f;
    v >>= 7;
    if (v) b |= 0x80;
    w.put_byte(b);
    ++n;
  } while (v);
  return n;
}

inline std::uint64_t get_varint(BitReader& r) {
  std::uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    const std::uint8_t b = r.get_byte();
    v |= std::uint64_t{b & 0x7fu} << shift;
    if (!(b & 0x80)) return v;
  }
  throw InvalidArgument("wire: varint too long");
}

inline void put_float(BitWriter& w, double x, int float_bits) {
  if (float_bits == 32) {
    w.put_bits(std::bit_cast<std::uint32_t>(static_cast<float>(x)), 32);
  } else {
    w.put_bits(std::bit_cast<std::uint64_t>(x), 64);
  }
}

inline double get_float(BitReader& r, int float_bits) {
  if (float_bits == 32)
    return std::bit_cast<float>(static_cast<std::uint32_t>(r.get_bits(32)));
  return std::bit_cast<double>(r.get_bits(64));
}

}  // namespace detail

inline Encoded encode(const QuantizedGradient& q, int float_bits = 64) {
  require(float_bits == 32 || float_bits == 64,
          "wire::encode: float_bits must be 32 or 64");
  const bool has_pos = !q.pos_indices.empty();
  const bool has_neg = !q.neg_indices.empty();
  require(!q.simplified || !has_neg,
          "wire::encode: simplified message with a negative part");
  require(!(has_pos && has_neg) ||
              q.pos_indices.size() == q.neg_indices.size(),
          "wire::encode: parts must carry the same number of indices");
  const std::uint64_t count =
      has_pos ? q.pos_indices.size() : q.neg_indices.size();

  std::uint8_t flags = 0;
  if (has_pos) flags |= kHasPos;
  if (has_neg) flags |= kHasNeg;
  if (q.simplified) flags |= kSimplified;
  if (float_bits == 32) flags |= kFloat32;
  if (q.unit_mass()) flags |= kUnitMass;

  BitWriter w;
  Encoded out;
  w.put_byte(flags);
  out.framing_bytes = 1;
  const int masses = q.transmitted_masses();
  if (masses >= 1) detail::put_float(w, q.pos_mass, float_bits);
  if (masses == 2) detail::put_float(w, q.neg_mass, float_bits);
  out.payload_bits += static_cast<std::uint64_t>(masses) * float_bits;
  out.framing_bytes += detail::put_varint(w, count);

  const int width = index_width(static_cast<std::uint64_t>(q.dim));
  for (SampleIndex k : q.pos_indices) w.put_bits(k, width);
  for (SampleIndex k : q.neg_indices) w.put_bits(k, width);
  out.payload_bits += q.index_count() * static_cast<std::uint64_t>(width);
  out.bytes = w.take();
  return out;
}

inline QuantizedGradient decode(std::span<const std::uint8_t> bytes,
                                Index dim) {
  BitReader r(bytes);
  const std::uint8_t flags = r.get_byte();
  const int float_bits = (flags & kFloat32) ? 32 : 64;
  QuantizedGradient q;
  q.dim = dim;
  q.simplified = flags & kSimplified;
  if (q.simplified) {
    q.pos_mass = (flags & kUnitMass) ? 1.0 : detail::get_float(r, float_bits);
  } else {
    q.pos_mass = detail::get_float(r, float_bits);
    q.neg_mass = detail::get_float(r, float_bits);
  }
  const std::uint64_t count = detail::get_varint(r);
  const int width = index_width(static_cast<std::uint64_t>(dim));
  auto read_part = [&](std::vector<SampleIndex>& part) {
    part.resize(count);
    for (auto& k : part) {
      k = static_cast<SampleIndex>(r.get_bits(width));
      require(static_cast<Index>(k) < dim, "wire: index out of range");
    }
  };
  if (flags & kHasPos) read_part(q.pos_indices);
  if (flags & kHasNeg) read_part(q.neg_indices);
  require(r.consumed() == bytes.size(), "wire: trailing bytes");
  return q;
}

}  // namespace ppsq::wire
