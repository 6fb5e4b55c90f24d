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

#include "rambo/bloom.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <utility>

#include "rambo/error.hpp"

namespace rambo {

BloomFilterUnit::BloomFilterUnit(std::uint64_t m, std::vector<UniversalHasher> hashers)
    : m_(m), hashers_(std::move(hashers)), words_((m + 63) / 64, 0) {
  if (m == 0) throw Error(ErrorCode::kInvalidParameter, "filter size m must be >= 1");
  if (hashers_.empty()) throw Error(ErrorCode::kInvalidParameter, "eta must be >= 1");
  for (const auto& h : hashers_) {
    if (h.range() != m) throw Error(ErrorCode::kInvalidParameter, "hasher range differs from m");
  }
}

BloomFilterUnit BloomFilterUnit::seeded(std::uint64_t m, std::uint32_t eta,
                                        std::uint64_t master_seed) {
  std::vector<UniversalHasher> hashers;
  hashers.reserve(eta);
  for (std::uint32_t j = 0; j < eta; ++j) {
    hashers.push_back(derive_hasher(master_seed, HashRole::kBloom, j, m));
  }
  return BloomFilterUnit(m, std::move(hashers));
}

void BloomFilterUnit::positions(KeyDigest x, std::vector<std::uint64_t>& out) const {
  out.resize(hashers_.size());
  for (std::size_t j = 0; j < hashers_.size(); ++j) out[j] = hashers_[j](x);
}

void BloomFilterUnit::insert_positions(std::span<const std::uint64_t> pos) noexcept {
  for (std::uint64_t i : pos) set(i);
  ++insert_count_;
}

void BloomFilterUnit::insert(KeyDigest x) {
  for (const auto& h : hashers_) set(h(x));
  ++insert_count_;
}

bool BloomFilterUnit::contains(KeyDigest x) const noexcept {
  for (const auto& h : hashers_) {
    if (!test(h(x))) return false;
  }
  return true;
}

std::uint64_t BloomFilterUnit::popcount() const noexcept {
  std::uint64_t n = 0;
  for (std::uint64_t w : words_) n += static_cast<std::uint64_t>(std::popcount(w));
  return n;
}

void BloomFilterUnit::write_bytes(std::span<std::uint8_t> out) const {
  if (out.size() != byte_size()) throw Error(ErrorCode::kIo, "filter byte buffer size mismatch");
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = static_cast<std::uint8_t>(words_[j >> 3] >> (8 * (j & 7)));
  }
}

void BloomFilterUnit::read_bytes(std::span<const std::uint8_t> in) {
  if (in.size() != byte_size()) throw Error(ErrorCode::kCorruptIndex, "filter byte length mismatch");
  std::fill(words_.begin(), words_.end(), 0);
  for (std::size_t j = 0; j < in.size(); ++j) {
    words_[j >> 3] |= static_cast<std::uint64_t>(in[j]) << (8 * (j & 7));
  }
  if (m_ % 64 != 0 && (words_.back() >> (m_ % 64)) != 0) {
    throw Error(ErrorCode::kCorruptIndex, "bits set beyond filter length");
  }
}

void BloomFilterUnit::merge_from(const BloomFilterUnit& other) {
  if (!compatible_with(other)) {
    throw Error(ErrorCode::kIncompatibleFilter, "filters differ in m, eta or hash seeds");
  }
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
  insert_count_ += other.insert_count_;
}

BloomFilterUnit bfu_or_merge(const BloomFilterUnit& f, const BloomFilterUnit& g) {
  BloomFilterUnit out = f;
  out.merge_from(g);
  return out;
}

double bfu_fp_theoretical(std::uint64_t n, std::uint64_t m, std::uint32_t eta) {
  if (m == 0 || eta == 0) throw Error(ErrorCode::kInvalidParameter, "m and eta must be >= 1");
  if (n == 0) return 0.0;
  const double k = eta;
  const double fill = -std::expm1(-k * static_cast<double>(n) / static_cast<double>(m));
  return std::pow(fill, k);
}

std::uint64_t bfu_size_for(std::uint64_t n, double p, std::uint32_t eta) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::kInvalidParameter, "p must lie in (0, 1)");
  if (eta == 0) throw Error(ErrorCode::kInvalidParameter, "eta must be >= 1");
  if (n == 0) return kMinFilterBits;
  const double k = eta;
  const double denom = -std::log1p(-std::pow(p, 1.0 / k));
  auto m = static_cast<std::uint64_t>(std::ceil(k * static_cast<double>(n) / denom));
  m = std::max(m, kMinFilterBits);
  while (bfu_fp_theoretical(n, m, eta) > p) ++m;
  return m;
}

OptimalBloomParams log2_bloom_params(double p, std::uint64_t n) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::kInvalidParameter, "p must lie in (0, 1)");
  const double bits = std::log2(1.0 / p);
  const auto eta = static_cast<std::uint32_t>(std::max(1.0, std::round(bits)));
  const auto m = static_cast<std::uint64_t>(std::ceil(static_cast<double>(n) * bits));
  return {eta, m};
}

}  // namespace rambo
