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

#include <cstdint>
#include <string_view>

namespace rambo {

/// The Mersenne prime 2^61 - 1 used as the Carter-Wegman field modulus.
inline constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

__extension__ using uint128 = unsigned __int128;

/// 64-bit FNV-1a digest of a term or set name. Every component hashes this
/// value rather than raw bytes so serialized indexes are portable.
struct KeyDigest {
  std::uint64_t value = 0;

  friend constexpr bool operator==(KeyDigest, KeyDigest) = default;
};

constexpr KeyDigest key_digest(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return KeyDigest{h};
}

/// Domain separation tags for seed derivation.
enum class HashRole : std::uint8_t {
  kPartition = 1,
  kShardRouter = 2,
  kBloom = 3,
};

/// ((a*x + b) mod P) mod range over P = 2^61 - 1, with a*x taken in 128 bits.
class UniversalHasher {
 public:
  /// Throws kInvalidParameter when range is zero or (a, b) fall outside the field.
  UniversalHasher(std::uint64_t a, std::uint64_t b, std::uint64_t range);

  std::uint64_t operator()(std::uint64_t x) const noexcept {
    return field_value(x) % range_;
  }
  std::uint64_t operator()(KeyDigest d) const noexcept { return (*this)(d.value); }

  /// (a*x + b) mod P before the range reduction.
  std::uint64_t field_value(std::uint64_t x) const noexcept {
    uint128 v = static_cast<uint128>(a_) * x + b_;
    // v < 2^125 + 2^61; two folds leave it below 2^61 + 9.
    v = (v & kMersenne61) + (v >> 61);
    v = (v & kMersenne61) + (v >> 61);
    auto r = static_cast<std::uint64_t>(v);
    return r >= kMersenne61 ? r - kMersenne61 : r;
  }

  std::uint64_t a() const noexcept { return a_; }
  std::uint64_t b() const noexcept { return b_; }
  std::uint64_t range() const noexcept { return range_; }

  /// Same (a, b), different modulus. Placement after a fold uses this.
  UniversalHasher with_range(std::uint64_t range) const { return {a_, b_, range}; }

  friend bool operator==(const UniversalHasher&, const UniversalHasher&) = default;

 private:
  std::uint64_t a_;
  std::uint64_t b_;
  std::uint64_t range_;
};

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic hasher for (master_seed, role, index). The (a, b) pair does not
/// depend on range, so hashers that differ only in range agree modulo any
/// common divisor of their ranges.
UniversalHasher derive_hasher(std::uint64_t master_seed, HashRole role, std::uint64_t index,
                              std::uint64_t range);

}  // namespace rambo
