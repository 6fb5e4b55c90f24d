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

#include "rambo/hashing.hpp"

#include <string>

#include "rambo/error.hpp"

namespace rambo {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidParameter: return "invalid-parameter";
    case ErrorCode::kInvalidQuery: return "invalid-query";
    case ErrorCode::kIncompatibleFilter: return "incompatible-filter";
    case ErrorCode::kCannotFold: return "cannot-fold";
    case ErrorCode::kIncompatibleShard: return "incompatible-shard";
    case ErrorCode::kCorruptIndex: return "corrupt-index";
    case ErrorCode::kInconsistentIndex: return "inconsistent-index";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

UniversalHasher::UniversalHasher(std::uint64_t a, std::uint64_t b, std::uint64_t range)
    : a_(a), b_(b), range_(range) {
  if (range == 0) throw Error(ErrorCode::kInvalidParameter, "hash range must be >= 1");
  if (a == 0 || a >= kMersenne61 || b >= kMersenne61) {
    throw Error(ErrorCode::kInvalidParameter, "hash coefficients outside [1, P) x [0, P)");
  }
}

UniversalHasher derive_hasher(std::uint64_t master_seed, HashRole role, std::uint64_t index,
                              std::uint64_t range) {
  if (range == 0) throw Error(ErrorCode::kInvalidParameter, "hash range must be >= 1");
  const std::uint64_t tag = (static_cast<std::uint64_t>(role) << 56) ^ index;
  const std::uint64_t state = mix64(mix64(master_seed) ^ mix64(tag));
  // a in [1, P-2], then forced odd; P-2 is odd so a stays below P.
  std::uint64_t a = 1 + mix64(state ^ 0x61) % (kMersenne61 - 2);
  a |= 1;
  const std::uint64_t b = mix64(state ^ 0x62) % kMersenne61;
  return UniversalHasher(a, b, range);
}

}  // namespace rambo
