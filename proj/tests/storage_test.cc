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

#include "rambo/storage.hpp"

#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "rambo/error.hpp"
#include "test_util.hpp"

namespace rambo::storage {
namespace {

using rambo::testing::TempDir;

RamboIndex sample_index(std::uint64_t seed = 5, std::uint32_t B = 8, std::uint32_t R = 3) {
  std::mt19937_64 rng(seed);
  RamboParams p;
  p.buckets = B;
  p.repetitions = R;
  p.eta = 3;
  p.bits_per_filter = 1001;  // not a multiple of 8
  p.kgram = 21;
  p.master_seed = seed;
  return testing::build_index(p, testing::random_corpus(rng, 20, 40));
}

ErrorCode load_error(std::span<const std::uint8_t> bytes) {
  try {
    deserialize(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "deserialize accepted bad input";
  return ErrorCode::kIo;
}

TEST(Storage, HeaderLayout) {
  const auto idx = sample_index();
  const auto bytes = serialize(idx);
  ASSERT_GE(bytes.size(), kHeaderBytes);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "RMBO");
  EXPECT_EQ(bytes[4] | (bytes[5] << 8), kFormatVersion);
  EXPECT_EQ(bytes[6], 8);  // B, little endian
  EXPECT_EQ(bytes[10], 3);  // R
}

TEST(Storage, RoundTripIsExact) {
  const auto idx = sample_index();
  const auto bytes = serialize(idx);
  const auto back = deserialize(bytes);
  EXPECT_EQ(back, idx);
  EXPECT_EQ(serialize(back), bytes);
  for (const auto& name : idx.registry().names()) {
    EXPECT_EQ(back.registry().find(name), idx.registry().find(name));
  }
}

TEST(Storage, SaveIsDeterministicAndAtomic) {
  TempDir dir;
  const auto idx = sample_index();
  save_index(idx, dir / "a.rmb");
  save_index(idx, dir / "b.rmb");
  EXPECT_EQ(testing::read_file(dir / "a.rmb"), testing::read_file(dir / "b.rmb"));
  EXPECT_FALSE(std::filesystem::exists(dir / "a.rmb.partial"));
  EXPECT_EQ(load_index(dir / "a.rmb"), idx);

  const auto h = read_header(dir / "a.rmb");
  EXPECT_EQ(h.params(), idx.params());
  EXPECT_EQ(h.set_count, 20u);
}

TEST(Storage, SaveToMissingDirectoryFails) {
  TempDir dir;
  try {
    save_index(sample_index(), dir / "no" / "such" / "x.rmb");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
  EXPECT_THROW(load_index(dir / "absent.rmb"), Error);
}

// Property: any single flipped bit is caught.
TEST(Storage, CorruptionIsDetected) {
  const auto bytes = serialize(sample_index());
  std::mt19937_64 rng(6);
  for (int i = 0; i < 200; ++i) {
    auto copy = bytes;
    copy[rng() % copy.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
    ASSERT_EQ(load_error(copy), ErrorCode::kCorruptIndex);
  }
  auto truncated = bytes;
  truncated.resize(bytes.size() - 9);
  EXPECT_EQ(load_error(truncated), ErrorCode::kCorruptIndex);
  EXPECT_EQ(load_error(std::span(bytes).first(10)), ErrorCode::kCorruptIndex);
}

void reseal(std::vector<std::uint8_t>& bytes) {
  bytes.resize(bytes.size() - 4);
  const auto crc = crc32(bytes);
  for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
}

TEST(Storage, ValidChecksumButInconsistentBody) {
  const auto idx = sample_index();
  auto bytes = serialize(idx);
  // First member list sits right after the registry; point its first id at K.
  std::size_t off = kHeaderBytes;
  for (const auto& n : idx.registry().names()) off += 4 + n.size();
  ASSERT_GT(bytes[off], 0);
  bytes[off + 4] = 20;
  bytes[off + 5] = bytes[off + 6] = bytes[off + 7] = 0;
  reseal(bytes);
  EXPECT_EQ(load_error(bytes), ErrorCode::kInconsistentIndex);

  auto huge = serialize(idx);
  huge[6] = huge[7] = huge[8] = 0xff;  // B ~ 2^32
  reseal(huge);
  EXPECT_EQ(load_error(huge), ErrorCode::kCorruptIndex);
}

TEST(Storage, Crc32KnownAnswer) {
  const std::string s = "123456789";
  EXPECT_EQ(crc32(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())),
            0xCBF43926u);
}

TEST(Storage, StackShardFiles) {
  TempDir dir;
  std::mt19937_64 rng(7);
  RamboParams global;
  global.buckets = 16;
  global.repetitions = 2;
  global.bits_per_filter = 2048;
  global.shards = 4;
  global.local_buckets = 4;
  global.master_seed = 11;
  const auto corpus = testing::random_corpus(rng, 24, 20);
  std::vector<RamboIndex> pieces(4, RamboIndex(shard_piece_params(global)));
  for (const auto& s : corpus) pieces[shard_of(global, s.name)].insert_set(s.name, s.terms);
  std::vector<std::filesystem::path> paths;
  for (int i = 0; i < 4; ++i) {
    paths.push_back(dir / ("p" + std::to_string(i)));
    save_index(pieces[i], paths.back());
  }
  EXPECT_EQ(stack_shards(paths), build_sharded(global, corpus));
  std::swap(paths[0], paths[1]);
  EXPECT_THROW(stack_shards(paths), Error);
}

}  // namespace
}  // namespace rambo::storage
