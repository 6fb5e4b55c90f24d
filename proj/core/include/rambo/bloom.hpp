/*
 *   Copyright 2026 The rambo-msmt Authors
 *
 *   Licensed under the Apache License, Version 2.0 (the "License");
 *   you may not use this file except in compliance with the License.
 *   You may obtain a copy of the License at
 *
 *       http://www.apache.org/licenses/LICENSE-2.0
 *
 *   Unless required by applicable law or agreed to in writing, software
 *   distributed under the License is distributed on an "AS IS" BASIS,
 *   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *   See the License for the specific language governing permissions and
 *   limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rambo/hashing.hpp"

namespace rambo {

/// Smallest admissible filter, used for degenerate (empty) inputs.
inline constexpr std::uint64_t kMinFilterBits = 8;

/**
 * Bloom Filter Unit: an m-bit array probed by eta universal hashers of range m.
 *
 * Bit i lives in byte i / 8 at position i % 8 (LSB first); in memory the bits
 * are held in little-endian 64-bit words so that byte view and word view agree.
 * insert_count is a build statistic only and does not take part in equality.
 */
class BloomFilterUnit {
 public:
  BloomFilterUnit(std::uint64_t m, std::vector<UniversalHasher> hashers);

  /// Filter whose hashers are derive_hasher(master_seed, kBloom, 0..eta-1, m).
  static BloomFilterUnit seeded(std::uint64_t m, std::uint32_t eta, std::uint64_t master_seed);

  void insert(KeyDigest x);
  bool contains(KeyDigest x) const noexcept;

  // Fast path for grids whose cells share one hasher tuple: hash once, probe many.
  void positions(KeyDigest x, std::vector<std::uint64_t>& out) const;
  void insert_positions(std::span<const std::uint64_t> pos) noexcept;
  bool contains_positions(std::span<const std::uint64_t> pos) const noexcept {
    for (std::uint64_t i : pos) {
      if (!test(i)) return false;
    }
    return true;
  }

  bool test(std::uint64_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1U; }
  void set(std::uint64_t i) noexcept { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }

  std::uint64_t popcount() const noexcept;
  double fill_ratio() const noexcept { return static_cast<double>(popcount()) / m_; }

  std::uint64_t m() const noexcept { return m_; }
  std::uint32_t eta() const noexcept { return static_cast<std::uint32_t>(hashers_.size()); }
  std::uint64_t insert_count() const noexcept { return insert_count_; }
  void set_insert_count(std::uint64_t n) noexcept { insert_count_ = n; }
  const std::vector<UniversalHasher>& hashers() const noexcept { return hashers_; }
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  std::size_t byte_size() const noexcept { return static_cast<std::size_t>((m_ + 7) / 8); }
  /// LSB-first packing, byte_size() bytes.
  void write_bytes(std::span<std::uint8_t> out) const;
  /// Inverse of write_bytes. Bits past m must be zero, otherwise kCorruptIndex.
  void read_bytes(std::span<const std::uint8_t> in);

  bool compatible_with(const BloomFilterUnit& other) const noexcept {
    return m_ == other.m_ && hashers_ == other.hashers_;
  }
  /// In-place OR. Throws kIncompatibleFilter on mismatched m / eta / seeds.
  void merge_from(const BloomFilterUnit& other);

  friend bool operator==(const BloomFilterUnit& a, const BloomFilterUnit& b) noexcept {
    return a.compatible_with(b) && a.words_ == b.words_;
  }

 private:
  std::uint64_t m_;
  std::vector<UniversalHasher> hashers_;
  std::vector<std::uint64_t> words_;
  std::uint64_t insert_count_ = 0;
};

/// (1 - e^{-eta n / m})^eta
double bfu_fp_theoretical(std::uint64_t n, std::uint64_t m, std::uint32_t eta);

/// Smallest m with bfu_fp_theoretical(n, m, eta) <= p at fixed eta; at least kMinFilterBits.
std::uint64_t bfu_size_for(std::uint64_t n, double p, std::uint32_t eta);

struct OptimalBloomParams {
  std::uint32_t eta;
  std::uint64_t m;
};

/// eta = round(log2(1/p)) (>= 1) and m = ceil(n * log2(1/p)).
/// Note this m is not the textbook optimum n * ln(1/p) / ln(2)^2; index sizing
/// uses bfu_size_for instead.
OptimalBloomParams log2_bloom_params(double p, std::uint64_t n);

BloomFilterUnit bfu_or_merge(const BloomFilterUnit& f, const BloomFilterUnit& g);

}  // namespace rambo
