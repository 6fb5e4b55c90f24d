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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rambo/bloom.hpp"
#include "rambo/hashing.hpp"

namespace rambo {

using SetId = std::uint32_t;

/**
 * Grid shape and hashing parameters.
 *
 * shards == 1 is a monolithic index. With shards > 1 the index is either the
 * stacked global grid (buckets == shards * local_buckets) or one shard piece
 * (buckets == local_buckets), i.e. the local_b x R sub-grid a single node builds.
 */
struct RamboParams {
  std::uint32_t buckets = 16;        // B
  std::uint32_t repetitions = 2;     // R
  std::uint32_t eta = 2;             // hash functions per BFU
  std::uint64_t bits_per_filter = 0; // m; 0 means "size it from a SizingHint"
  std::uint32_t kgram = 31;          // k
  std::uint64_t master_seed = 0;
  std::uint32_t shards = 1;
  std::uint32_t local_buckets = 0;   // b of the two-level placement

  /// Throws kInvalidParameter.
  void validate() const;

  bool is_sharded() const noexcept { return shards > 1; }
  bool is_shard_piece() const noexcept { return shards > 1 && buckets == local_buckets; }

  friend bool operator==(const RamboParams&, const RamboParams&) = default;
};

/// Inputs for choosing m when params.bits_per_filter == 0.
struct SizingHint {
  std::uint64_t expected_sets = 0;          // K estimate
  std::uint64_t expected_terms_per_set = 0; // sampled average cardinality
  double target_p = 0.01;
};

/// m = bfu_size_for(terms_per_set * ceil(K / B), p, eta).
std::uint64_t filter_bits_for(const RamboParams& params, const SizingHint& hint);

/// Dense ids [0, K) for set names, in registration order.
class SetRegistry {
 public:
  std::optional<SetId> find(std::string_view name) const;
  /// Returns the existing id when the name is already registered.
  SetId add(std::string_view name);

  const std::string& name(SetId id) const { return names_.at(id); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }

  friend bool operator==(const SetRegistry& a, const SetRegistry& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, SetId> ids_;
};

struct QueryResult {
  std::vector<SetId> set_ids;      // ascending
  std::uint64_t bfu_probes = 0;    // BFU membership tests performed
  std::uint64_t intersect_work = 0;// sum over tables of |G_r| fed to the intersection
};

enum class QueryMode {
  kBucketConjunction,  // a cell passes only if every term hits it
  kTermAtATime,        // intersect per-term answers, stop once empty
};

class RamboIndex;

/// Streams terms of one set into its R cells. Obtained from RamboIndex::open_set.
class SetWriter {
 public:
  SetId id() const noexcept { return id_; }
  void add(std::string_view term);
  void add(KeyDigest term);

 private:
  friend class RamboIndex;
  SetWriter(RamboIndex& index, SetId id, std::vector<std::size_t> cells);

  RamboIndex* index_;
  SetId id_;
  std::vector<std::size_t> cells_;
  std::vector<std::uint64_t> scratch_;
};

/**
 * B x R grid of Bloom filter units. Each table partitions the K sets into B
 * cells by hashing the set name; a cell's filter holds the union of its sets'
 * terms and every cell shares one eta-tuple of bloom hashers.
 */
class RamboIndex {
 public:
  /// Empty grid. params.bits_per_filter must be set.
  explicit RamboIndex(const RamboParams& params);

  /// Assembles an index from stored parts and checks the partition invariant
  /// (kInconsistentIndex). members and filters are table-major: [r * B + b].
  RamboIndex(const RamboParams& params, SetRegistry registry,
             std::vector<std::vector<SetId>> members, std::vector<BloomFilterUnit> filters);

  /// Sizes m from the hint unless params.bits_per_filter is already set.
  static RamboIndex create(RamboParams params, const SizingHint& hint);

  const RamboParams& params() const noexcept { return params_; }
  const SetRegistry& registry() const noexcept { return registry_; }
  std::size_t set_count() const noexcept { return registry_.size(); }
  std::uint32_t buckets() const noexcept { return params_.buckets; }
  std::uint32_t repetitions() const noexcept { return params_.repetitions; }
  std::uint64_t filter_bits() const noexcept { return params_.bits_per_filter; }

  const BloomFilterUnit& cell(std::uint32_t b, std::uint32_t r) const { return filters_.at(slot(b, r)); }
  std::span<const SetId> members(std::uint32_t b, std::uint32_t r) const { return members_.at(slot(b, r)); }

  /// Cell of a set name in table r: phi_r(name) for monolithic grids and shard
  /// pieces, local_b * tau(name) + phi_r(name) for stacked sharded grids.
  std::uint32_t placement(std::string_view name, std::uint32_t r) const {
    return placement(key_digest(name), r);
  }
  std::uint32_t placement(KeyDigest name, std::uint32_t r) const;

  /// Registers the set on first sight; later calls append to the same set.
  SetWriter open_set(std::string_view name);

  template <typename Terms>
  SetId insert_set(std::string_view name, const Terms& terms) {
    SetWriter w = open_set(name);
    for (const auto& t : terms) w.add(std::string_view(t));
    return w.id();
  }

  QueryResult query_term(std::string_view term) const;
  QueryResult query_terms(std::span<const std::string_view> terms, QueryMode mode) const;
  QueryResult query_terms(const std::vector<std::string>& terms, QueryMode mode) const;
  /// Conjunction over the distinct k-grams of seq, term at a time with early exit.
  QueryResult query_sequence(std::string_view seq, std::uint32_t k) const;
  QueryResult query_sequence(std::string_view seq) const { return query_sequence(seq, params_.kgram); }

  /// Halves B by OR-ing cell (b, r) with (b + B/2, r). Throws kCannotFold.
  RamboIndex fold() const;

  /// Sum over cells of ceil(m / 8).
  std::uint64_t grid_bytes() const noexcept;

  std::span<const BloomFilterUnit> filters() const noexcept { return filters_; }
  std::span<const std::vector<SetId>> all_members() const noexcept { return members_; }

  /// Persisted state only: params, registry, member lists and filter bits.
  friend bool operator==(const RamboIndex& a, const RamboIndex& b) {
    return a.params_ == b.params_ && a.registry_ == b.registry_ && a.members_ == b.members_ &&
           a.filters_ == b.filters_;
  }

 private:
  friend class SetWriter;

  std::size_t slot(std::uint32_t b, std::uint32_t r) const noexcept {
    return static_cast<std::size_t>(r) * params_.buckets + b;
  }
  void init_hashers();
  void check_partition() const;
  /// Union of member lists of cells in table r that pass `hit`.
  template <typename Hit>
  void table_union(std::uint32_t r, Hit&& hit, std::vector<SetId>& out) const;
  QueryResult query_digest(KeyDigest d, std::vector<std::uint64_t>& pos) const;

  RamboParams params_;
  SetRegistry registry_;
  std::vector<std::vector<SetId>> members_;
  std::vector<BloomFilterUnit> filters_;
  std::vector<UniversalHasher> partition_;
  std::optional<UniversalHasher> router_;
};

/// Two-level placement local_b * tau(name) + phi_r(name); requires shards > 1.
std::uint32_t shard_placement(const RamboParams& params, std::string_view set_name, std::uint32_t r);

/// tau(name), the shard a set is routed to; requires shards > 1.
std::uint32_t shard_of(const RamboParams& params, std::string_view set_name);

/// Params of one shard piece (local_b x R) for a global sharded layout.
RamboParams shard_piece_params(const RamboParams& global);

/// Stacks pieces vertically: piece i fills rows [i * local_b, (i + 1) * local_b)
/// and its set ids are offset by the set counts of pieces 0..i-1.
/// Throws kIncompatibleShard on parameter mismatch or misrouted sets.
RamboIndex stack_shards(std::span<const RamboIndex> pieces);

struct CorpusSet {
  std::string name;
  std::vector<std::string> terms;
};

/// Routes each set wholly to piece tau(name), builds the pieces independently
/// and stacks them. Set ids come out shard-major. shards == 1 builds monolithically.
RamboIndex build_sharded(const RamboParams& params, std::span<const CorpusSet> corpus);

}  // namespace rambo
