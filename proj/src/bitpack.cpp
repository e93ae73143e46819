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

#include "bnnsim/bitpack.hpp"

#include <algorithm>
#include <bit>

#include "bnnsim/errors.hpp"

namespace bnnsim {

namespace {

constexpr std::size_t limbs_for(std::size_t bits) { return (bits + 63) / 64; }

// Mask of bits [lo, hi) inside one limb, 0 <= lo < hi <= 64.
constexpr std::uint64_t range_mask(unsigned lo, unsigned hi) {
  const std::uint64_t upper = hi == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << hi) - 1);
  return upper & ~((std::uint64_t{1} << lo) - 1);
}

// Reads up to 64 bits starting at bit position pos.
std::uint64_t read_bits(std::span<const std::uint64_t> limbs, std::size_t pos, unsigned count) {
  const std::size_t li = pos >> 6;
  const unsigned sh = pos & 63;
  std::uint64_t v = limbs[li] >> sh;
  if (sh != 0 && sh + count > 64) v |= limbs[li + 1] << (64 - sh);
  if (count < 64) v &= (std::uint64_t{1} << count) - 1;
  return v;
}

// popcount(xnor(a, b)) over bits [lo, hi).
unsigned xnor_popcount(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                       std::size_t lo, std::size_t hi) {
  unsigned total = 0;
  while (lo < hi) {
    const std::size_t li = lo >> 6;
    const unsigned first = lo & 63;
    const unsigned last = static_cast<unsigned>(std::min<std::size_t>(64, first + (hi - lo)));
    total += std::popcount(~(a[li] ^ b[li]) & range_mask(first, last));
    lo += last - first;
  }
  return total;
}

}  // namespace

WordWidth::WordWidth(unsigned bits) : bits_(bits) {
  if (!is_supported(bits)) {
    throw InvalidInputError("unsupported word width " + std::to_string(bits) +
                            " (expected one of 32, 64, 128, 256, 512)");
  }
}

bool WordWidth::is_supported(unsigned bits) {
  return std::find(kSupported.begin(), kSupported.end(), bits) != kSupported.end();
}

std::string Shape::to_string() const {
  return "(" + std::to_string(channels) + "," + std::to_string(height) + "," +
         std::to_string(width) + ")";
}

PackedBitVector::PackedBitVector(WordWidth m) : width_(m) {}

PackedBitVector::PackedBitVector(std::size_t valid_bits, WordWidth m)
    : limbs_(limbs_for(valid_bits), 0), valid_bits_(valid_bits), width_(m) {}

PackedBitVector PackedBitVector::from_limbs(std::vector<std::uint64_t> limbs,
                                            std::size_t valid_bits, WordWidth m) {
  if (limbs.size() != limbs_for(valid_bits)) {
    throw InvalidInputError("limb count does not match valid bit count");
  }
  PackedBitVector v(m);
  v.limbs_ = std::move(limbs);
  v.valid_bits_ = valid_bits;
  return v;
}

PackedBitVector PackedBitVector::from_bytes(std::span<const std::uint8_t> bytes,
                                            std::size_t valid_bits, WordWidth m) {
  if (bytes.size() != (valid_bits + 7) / 8) {
    throw InvalidInputError("byte count does not match valid bit count");
  }
  PackedBitVector v(valid_bits, m);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    v.limbs_[i / 8] |= std::uint64_t{bytes[i]} << (8 * (i % 8));
  }
  v.canonicalize();
  return v;
}

std::vector<std::uint8_t> PackedBitVector::to_bytes() const {
  std::vector<std::uint8_t> out((valid_bits_ + 7) / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(limbs_[i / 8] >> (8 * (i % 8)));
  }
  if (valid_bits_ % 8 != 0) out.back() &= static_cast<std::uint8_t>((1u << (valid_bits_ % 8)) - 1);
  return out;
}

std::size_t PackedBitVector::word_count() const {
  return (valid_bits_ + width_.bits() - 1) / width_.bits();
}

void PackedBitVector::set_bit(std::size_t i, bool value) {
  const std::uint64_t mask = std::uint64_t{1} << (i & 63);
  if (value) {
    limbs_[i >> 6] |= mask;
  } else {
    limbs_[i >> 6] &= ~mask;
  }
}

void PackedBitVector::push_back(bool value) {
  if ((valid_bits_ & 63) == 0) limbs_.push_back(0);
  if (value) limbs_.back() |= std::uint64_t{1} << (valid_bits_ & 63);
  ++valid_bits_;
}

void PackedBitVector::append_range(const PackedBitVector& src, std::size_t offset,
                                   std::size_t count) {
  if (offset + count > src.valid_bits_) {
    throw ContractError("append_range reads past the end of the source vector");
  }
  limbs_.resize(limbs_for(valid_bits_ + count), 0);
  while (count > 0) {
    const unsigned dst_sh = valid_bits_ & 63;
    const unsigned take = static_cast<unsigned>(std::min<std::size_t>(count, 64 - dst_sh));
    const std::uint64_t chunk = read_bits(src.limbs_, offset, take);
    std::uint64_t& dst = limbs_[valid_bits_ >> 6];
    const std::uint64_t keep = dst_sh == 0 ? 0 : range_mask(0, dst_sh);
    dst = (dst & keep) | (chunk << dst_sh);
    valid_bits_ += take;
    offset += take;
    count -= take;
  }
}

void PackedBitVector::canonicalize() {
  if (valid_bits_ & 63) limbs_.back() &= range_mask(0, valid_bits_ & 63);
}

PackedBitVector PackedBitVector::with_width(WordWidth m) const {
  PackedBitVector v = *this;
  v.width_ = m;
  return v;
}

bool operator==(const PackedBitVector& a, const PackedBitVector& b) {
  if (a.width_ != b.width_ || a.valid_bits_ != b.valid_bits_) return false;
  const std::size_t full = a.valid_bits_ / 64;
  for (std::size_t i = 0; i < full; ++i) {
    if (a.limbs_[i] != b.limbs_[i]) return false;
  }
  if (const unsigned rest = a.valid_bits_ & 63; rest != 0) {
    const std::uint64_t mask = range_mask(0, rest);
    if ((a.limbs_[full] & mask) != (b.limbs_[full] & mask)) return false;
  }
  return true;
}

PackedBitVector pack(std::span<const int> values, WordWidth m) {
  PackedBitVector v(values.size(), m);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == 1) {
      v.set_bit(i, true);
    } else if (values[i] != -1) {
      throw InvalidInputError("pack: element " + std::to_string(i) + " is " +
                              std::to_string(values[i]) + ", expected -1 or +1");
    }
  }
  return v;
}

std::vector<int> unpack(const PackedBitVector& v) {
  std::vector<int> out(v.valid_bits());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = v.bit(i) ? 1 : -1;
  return out;
}

std::int32_t signed_dot(const PackedBitVector& a, const PackedBitVector& b) {
  return detail::signed_dot_chunked(a, b, true);
}

namespace detail {

std::int32_t signed_dot_chunked(const PackedBitVector& a, const PackedBitVector& b,
                                bool mask_tail) {
  if (a.valid_bits() != b.valid_bits()) {
    throw ContractError("signed_dot: length mismatch (" + std::to_string(a.valid_bits()) +
                        " vs " + std::to_string(b.valid_bits()) + ")");
  }
  if (a.width() != b.width()) throw ContractError("signed_dot: word width mismatch");
  const std::size_t n = a.valid_bits();
  const std::size_t m = a.width().bits();
  const auto la = a.limbs();
  const auto lb = b.limbs();
  std::int32_t acc = 0;
  for (std::size_t lo = 0; lo < n; lo += m) {
    std::size_t hi = std::min(lo + m, n);
    if (!mask_tail) {
      // Faulty variant: read the whole word, padding included. The limb
      // storage always covers whole limbs, so clamp to that.
      hi = std::min(lo + m, la.size() * 64);
    }
    const auto chunk_bits = static_cast<std::int32_t>(hi - lo);
    acc += 2 * static_cast<std::int32_t>(xnor_popcount(la, lb, lo, hi)) - chunk_bits;
  }
  return acc;
}

}  // namespace detail

}  // namespace bnnsim
