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
#include <filesystem>
#include <span>
#include <vector>

#include "rambo/index.hpp"

namespace rambo::storage {

inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 42;

/**
 * On-disk layout, all integers little-endian:
 *
 *   "RMBO" u16 version  u32 B  u16 R  u16 eta  u64 m  u16 k  u64 seed
 *   u16 shards  u32 local_b  u32 K                              (42 bytes)
 *   K x { u32 length, name bytes }                              registry, id order
 *   for r in [0,R), b in [0,B): u32 count, count x u32 set id   member lists
 *   for r in [0,R), b in [0,B): ceil(m/8) bytes, LSB-first      filter bits
 *   u32 CRC-32 (IEEE) of everything above
 */
struct IndexFileHeader {
  std::uint16_t version = kFormatVersion;
  std::uint32_t buckets = 0;
  std::uint16_t repetitions = 0;
  std::uint16_t eta = 0;
  std::uint64_t bits_per_filter = 0;
  std::uint16_t kgram = 0;
  std::uint64_t master_seed = 0;
  std::uint16_t shards = 1;
  std::uint32_t local_buckets = 0;
  std::uint32_t set_count = 0;

  RamboParams params() const;
};

std::vector<std::uint8_t> serialize(const RamboIndex& index);
/// Throws kCorruptIndex (magic, version, CRC, truncation) or kInconsistentIndex.
RamboIndex deserialize(std::span<const std::uint8_t> bytes);

/// Reads and validates only the header (no CRC check).
IndexFileHeader read_header(const std::filesystem::path& path);

/// Writes via a temporary sibling and renames; a failed write leaves no file.
void save_index(const RamboIndex& index, const std::filesystem::path& path);
RamboIndex load_index(const std::filesystem::path& path);

/// Loads shard piece files (ordered by shard ordinal) and stacks them.
RamboIndex stack_shards(std::span<const std::filesystem::path> paths);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

}  // namespace rambo::storage
