/* Copyright 2026 The bnnsim Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bnnsim {

// Bits per memory entry / machine word. Only the widths a memory compiler
// would realistically offer are accepted.
class WordWidth {
 public:
  static constexpr std::array<unsigned, 5> kSupported{32, 64, 128, 256, 512};

  explicit WordWidth(unsigned bits);

  unsigned bits() const { return bits_; }
  static bool is_supported(unsigned bits);

  friend auto operator<=>(const WordWidth&, const WordWidth&) = default;

 private:
  unsigned bits_;
};

// (channels, height, width) of a feature map.
struct Shape {
  int channels = 0;
  int height = 0;
  int width = 0;

  std::size_t elements() const {
    return static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
           static_cast<std::size_t>(width);
  }
  std::string to_string() const;
  friend bool operator==(const Shape&, const Shape&) = default;
};

// +/-1 values packed LSB-first: logical bit i lives in word i / m at position
// i % m, bit 1 encodes +1 and bit 0 encodes -1. Storage is a run of 64-bit
// limbs; since the layout is LSB-first, an m-bit word is simply a contiguous
// slice of limbs (or half a limb for m = 32), so the width only changes how
// the vector is chunked, never where a bit lives.
class PackedBitVector {
 public:
  explicit PackedBitVector(WordWidth m = WordWidth{64});
  PackedBitVector(std::size_t valid_bits, WordWidth m);

  // Adopts limbs verbatim. Padding bits are left as given; call
  // canonicalize() to clear them.
  static PackedBitVector from_limbs(std::vector<std::uint64_t> limbs, std::size_t valid_bits,
                                    WordWidth m);
  // Little-endian bytes, LSB-first within each byte.
  static PackedBitVector from_bytes(std::span<const std::uint8_t> bytes, std::size_t valid_bits,
                                    WordWidth m);
  std::vector<std::uint8_t> to_bytes() const;

  std::size_t valid_bits() const { return valid_bits_; }
  WordWidth width() const { return width_; }
  // ceil(valid_bits / m)
  std::size_t word_count() const;
  std::span<const std::uint64_t> limbs() const { return limbs_; }

  bool bit(std::size_t i) const {
    return (limbs_[i >> 6] >> (i & 63)) & 1u;
  }
  void set_bit(std::size_t i, bool value);
  void push_back(bool value);
  // Appends src bits [offset, offset + count).
  void append_range(const PackedBitVector& src, std::size_t offset, std::size_t count);
  void clear() {
    limbs_.clear();
    valid_bits_ = 0;
  }
  void reserve_bits(std::size_t bits) { limbs_.reserve((bits + 63) / 64); }

  // Zeroes every bit at position >= valid_bits.
  void canonicalize();
  PackedBitVector with_width(WordWidth m) const;

  // Logical equality: same width, same valid bits, same bit values.
  friend bool operator==(const PackedBitVector& a, const PackedBitVector& b);

 private:
  std::vector<std::uint64_t> limbs_;
  std::size_t valid_bits_ = 0;
  WordWidth width_;
};

// Channel-major feature map: element (c, h, w) is logical bit
// (h * width + w) * channels + c.
struct PackedBitTensor {
  Shape shape;
  PackedBitVector data;

  PackedBitTensor() = default;
  PackedBitTensor(Shape s, WordWidth m) : shape(s), data(s.elements(), m) {}

  std::size_t index(int c, int h, int w) const {
    return (static_cast<std::size_t>(h) * static_cast<std::size_t>(shape.width) +
            static_cast<std::size_t>(w)) *
               static_cast<std::size_t>(shape.channels) +
           static_cast<std::size_t>(c);
  }
  bool at(int c, int h, int w) const { return data.bit(index(c, h, w)); }
  void set(int c, int h, int w, bool v) { data.set_bit(index(c, h, w), v); }

  friend bool operator==(const PackedBitTensor&, const PackedBitTensor&) = default;
};

// sign(x) with sign(0) = +1. Returns true for +1.
constexpr bool binarize(std::int64_t x) { return x >= 0; }

// values must contain only -1 / +1.
PackedBitVector pack(std::span<const int> values, WordWidth m);
std::vector<int> unpack(const PackedBitVector& v);

// Sum of a_i * b_i in +/-1 semantics, accumulated word by word as
// 2 * pcnt(xnor(a_w, b_w) & valid_mask) - valid_bits_in_word.
std::int32_t signed_dot(const PackedBitVector& a, const PackedBitVector& b);

// Number of fused xnor/popcount instructions needed for a valid_bits long
// dot product on an m-bit machine.
inline std::size_t xnor_pcnt_instruction_count(std::size_t valid_bits, WordWidth m) {
  return (valid_bits + m.bits() - 1) / m.bits();
}

namespace detail {

// signed_dot with an optional fault: when mask_tail is false the final
// partial word is treated as full, so padding bits leak into the result.
// Only the mutation tests use the faulty variant.
std::int32_t signed_dot_chunked(const PackedBitVector& a, const PackedBitVector& b,
                                bool mask_tail);

}  // namespace detail

}  // namespace bnnsim
