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

#include "rambo/index.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <unordered_set>
#include <utility>

#include "rambo/error.hpp"

namespace rambo {
namespace {

constexpr std::uint32_t kMaxU16 = std::numeric_limits<std::uint16_t>::max();

void invalid(const std::string& what) { throw Error(ErrorCode::kInvalidParameter, what); }

void intersect_into(std::vector<SetId>& running, const std::vector<SetId>& next,
                    std::vector<SetId>& tmp) {
  tmp.clear();
  std::set_intersection(running.begin(), running.end(), next.begin(), next.end(),
                        std::back_inserter(tmp));
  running.swap(tmp);
}

std::vector<SetId> merge_sorted(std::span<const SetId> a, std::span<const SetId> b) {
  std::vector<SetId> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

void RamboParams::validate() const {
  if (buckets < 2) invalid("B must be >= 2");
  if (repetitions < 1 || repetitions > kMaxU16) invalid("R must lie in [1, 65535]");
  if (eta < 1 || eta > kMaxU16) invalid("eta must lie in [1, 65535]");
  if (kgram < 1 || kgram > kMaxU16) invalid("k must lie in [1, 65535]");
  if (shards < 1 || shards > kMaxU16) invalid("shard count must lie in [1, 65535]");
  if (shards > 1) {
    if (local_buckets < 1) invalid("local_b must be >= 1 when shards > 1");
    const std::uint64_t global = std::uint64_t{shards} * local_buckets;
    if (buckets != global && buckets != local_buckets) {
      invalid("B must equal shards * local_b (or local_b for a shard piece)");
    }
  }
}

std::uint64_t filter_bits_for(const RamboParams& params, const SizingHint& hint) {
  const std::uint64_t sets_per_cell =
      (hint.expected_sets + params.buckets - 1) / std::max<std::uint32_t>(params.buckets, 1);
  return bfu_size_for(hint.expected_terms_per_set * sets_per_cell, hint.target_p, params.eta);
}

// ---------------------------------------------------------------------------

std::optional<SetId> SetRegistry::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

SetId SetRegistry::add(std::string_view name) {
  if (auto id = find(name)) return *id;
  if (names_.size() >= std::numeric_limits<SetId>::max()) invalid("too many sets");
  const auto id = static_cast<SetId>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

// ---------------------------------------------------------------------------

SetWriter::SetWriter(RamboIndex& index, SetId id, std::vector<std::size_t> cells)
    : index_(&index), id_(id), cells_(std::move(cells)) {}

void SetWriter::add(std::string_view term) { add(key_digest(term)); }

void SetWriter::add(KeyDigest term) {
  auto& filters = index_->filters_;
  filters[cells_.front()].positions(term, scratch_);
  for (std::size_t c : cells_) filters[c].insert_positions(scratch_);
}

// ---------------------------------------------------------------------------

RamboIndex::RamboIndex(const RamboParams& params) : params_(params) {
  params_.validate();
  if (params_.bits_per_filter == 0) invalid("bits per filter (m) must be set");
  if (params_.shards == 1) params_.local_buckets = 0;
  init_hashers();
  const std::size_t cells = std::size_t{params_.buckets} * params_.repetitions;
  members_.assign(cells, {});
  filters_.assign(cells, BloomFilterUnit::seeded(params_.bits_per_filter, params_.eta,
                                                 params_.master_seed));
}

RamboIndex::RamboIndex(const RamboParams& params, SetRegistry registry,
                       std::vector<std::vector<SetId>> members,
                       std::vector<BloomFilterUnit> filters)
    : RamboIndex(params) {
  const std::size_t cells = std::size_t{params_.buckets} * params_.repetitions;
  if (members.size() != cells || filters.size() != cells) {
    throw Error(ErrorCode::kInconsistentIndex, "grid part count differs from B * R");
  }
  for (const auto& f : filters) {
    if (!f.compatible_with(filters_.front())) {
      throw Error(ErrorCode::kInconsistentIndex, "filter parameters differ from the header");
    }
  }
  registry_ = std::move(registry);
  members_ = std::move(members);
  filters_ = std::move(filters);
  check_partition();
}

RamboIndex RamboIndex::create(RamboParams params, const SizingHint& hint) {
  if (params.bits_per_filter == 0) params.bits_per_filter = filter_bits_for(params, hint);
  return RamboIndex(params);
}

void RamboIndex::init_hashers() {
  const std::uint32_t range = params_.is_sharded() ? params_.local_buckets : params_.buckets;
  partition_.clear();
  for (std::uint32_t r = 0; r < params_.repetitions; ++r) {
    partition_.push_back(derive_hasher(params_.master_seed, HashRole::kPartition, r, range));
  }
  router_.reset();
  if (params_.is_sharded()) {
    router_ = derive_hasher(params_.master_seed, HashRole::kShardRouter, 0, params_.shards);
  }
}

void RamboIndex::check_partition() const {
  const std::size_t k = registry_.size();
  std::vector<char> seen;
  for (std::uint32_t r = 0; r < params_.repetitions; ++r) {
    seen.assign(k, 0);
    std::size_t total = 0;
    for (std::uint32_t b = 0; b < params_.buckets; ++b) {
      const auto& list = members_[slot(b, r)];
      for (std::size_t i = 0; i < list.size(); ++i) {
        const SetId id = list[i];
        if (id >= k || seen[id] || (i > 0 && list[i - 1] >= id)) {
          throw Error(ErrorCode::kInconsistentIndex,
                      "member lists of table " + std::to_string(r) + " do not partition the sets");
        }
        seen[id] = 1;
      }
      total += list.size();
    }
    if (total != k) {
      throw Error(ErrorCode::kInconsistentIndex,
                  "table " + std::to_string(r) + " does not cover every set");
    }
  }
}

std::uint32_t RamboIndex::placement(KeyDigest name, std::uint32_t r) const {
  const auto local = static_cast<std::uint32_t>(partition_.at(r)(name));
  if (!params_.is_sharded() || params_.is_shard_piece()) return local;
  return params_.local_buckets * static_cast<std::uint32_t>((*router_)(name)) + local;
}

SetWriter RamboIndex::open_set(std::string_view name) {
  const auto existing = registry_.find(name);
  const SetId id = existing ? *existing : registry_.add(name);
  const KeyDigest d = key_digest(name);
  std::vector<std::size_t> cells;
  cells.reserve(params_.repetitions);
  for (std::uint32_t r = 0; r < params_.repetitions; ++r) {
    const std::size_t s = slot(placement(d, r), r);
    cells.push_back(s);
    if (!existing) members_[s].push_back(id);  // ids grow, lists stay sorted
  }
  return SetWriter(*this, id, std::move(cells));
}

QueryResult RamboIndex::query_digest(KeyDigest d, std::vector<std::uint64_t>& pos) const {
  filters_.front().positions(d, pos);
  QueryResult result;
  std::vector<SetId> table, tmp;
  bool first = true;
  bool settled = false;
  for (std::uint32_t r = 0; r < params_.repetitions; ++r) {
    table.clear();
    for (std::uint32_t b = 0; b < params_.buckets; ++b) {
      ++result.bfu_probes;
      if (!filters_[slot(b, r)].contains_positions(pos) || settled) continue;
      const auto& list = members_[slot(b, r)];
      table.insert(table.end(), list.begin(), list.end());
    }
    if (settled) continue;
    std::sort(table.begin(), table.end());
    result.intersect_work += table.size();
    if (first) {
      result.set_ids.swap(table);
      first = false;
    } else {
      intersect_into(result.set_ids, table, tmp);
    }
    settled = result.set_ids.empty();
  }
  return result;
}

QueryResult RamboIndex::query_term(std::string_view term) const {
  if (term.empty()) throw Error(ErrorCode::kInvalidQuery, "empty query term");
  std::vector<std::uint64_t> pos;
  return query_digest(key_digest(term), pos);
}

QueryResult RamboIndex::query_terms(std::span<const std::string_view> terms,
                                    QueryMode mode) const {
  if (terms.empty()) throw Error(ErrorCode::kInvalidQuery, "empty query term list");
  for (auto t : terms) {
    if (t.empty()) throw Error(ErrorCode::kInvalidQuery, "empty query term");
  }

  QueryResult result;
  std::vector<SetId> tmp;
  if (mode == QueryMode::kTermAtATime) {
    std::vector<std::uint64_t> pos;
    bool first = true;
    for (auto t : terms) {
      QueryResult one = query_digest(key_digest(t), pos);
      result.bfu_probes += one.bfu_probes;
      result.intersect_work += one.intersect_work;
      if (first) {
        result.set_ids = std::move(one.set_ids);
        first = false;
      } else {
        intersect_into(result.set_ids, one.set_ids, tmp);
      }
      if (result.set_ids.empty()) break;
    }
    return result;
  }

  std::vector<std::vector<std::uint64_t>> positions(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    filters_.front().positions(key_digest(terms[i]), positions[i]);
  }
  std::vector<SetId> table;
  for (std::uint32_t r = 0; r < params_.repetitions; ++r) {
    table.clear();
    for (std::uint32_t b = 0; b < params_.buckets; ++b) {
      const auto& f = filters_[slot(b, r)];
      bool pass = true;
      for (const auto& pos : positions) {
        ++result.bfu_probes;
        if (!f.contains_positions(pos)) {
          pass = false;
          break;
        }
      }
      if (!pass) continue;
      const auto& list = members_[slot(b, r)];
      table.insert(table.end(), list.begin(), list.end());
    }
    std::sort(table.begin(), table.end());
    result.intersect_work += table.size();
    if (r == 0) {
      result.set_ids = table;
    } else {
      intersect_into(result.set_ids, table, tmp);
    }
    if (result.set_ids.empty()) break;
  }
  return result;
}

QueryResult RamboIndex::query_terms(const std::vector<std::string>& terms, QueryMode mode) const {
  std::vector<std::string_view> views(terms.begin(), terms.end());
  return query_terms(std::span<const std::string_view>(views), mode);
}

QueryResult RamboIndex::query_sequence(std::string_view seq, std::uint32_t k) const {
  if (k == 0) invalid("k must be >= 1");
  if (seq.size() < k) {
    throw Error(ErrorCode::kInvalidQuery, "sequence shorter than k = " + std::to_string(k));
  }
  std::vector<std::string_view> grams;
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 0; i + k <= seq.size(); ++i) {
    auto g = seq.substr(i, k);
    if (seen.insert(g).second) grams.push_back(g);
  }
  return query_terms(std::span<const std::string_view>(grams), QueryMode::kTermAtATime);
}

RamboIndex RamboIndex::fold() const {
  if (params_.is_shard_piece()) {
    throw Error(ErrorCode::kCannotFold, "shard pieces cannot be folded; stack them first");
  }
  if (params_.buckets % 2 != 0) {
    throw Error(ErrorCode::kCannotFold, "B = " + std::to_string(params_.buckets) + " is odd");
  }
  if (params_.is_sharded() && params_.shards % 2 != 0) {
    throw Error(ErrorCode::kCannotFold,
                "stacked index with an odd shard count (" + std::to_string(params_.shards) + ")");
  }

  RamboParams next = params_;
  next.buckets = params_.buckets / 2;
  if (params_.is_sharded()) {
    next.shards = params_.shards / 2;
    if (next.shards == 1) next.local_buckets = 0;
  }

  RamboIndex out(next);
  out.registry_ = registry_;
  const std::uint32_t half = next.buckets;
  for (std::uint32_t r = 0; r < params_.repetitions; ++r) {
    for (std::uint32_t b = 0; b < half; ++b) {
      const std::size_t lo = slot(b, r);
      const std::size_t hi = slot(b + half, r);
      const std::size_t dst = out.slot(b, r);
      out.filters_[dst] = bfu_or_merge(filters_[lo], filters_[hi]);
      out.members_[dst] = merge_sorted(members_[lo], members_[hi]);
    }
  }
  return out;
}

std::uint64_t RamboIndex::grid_bytes() const noexcept {
  return std::uint64_t{params_.buckets} * params_.repetitions * ((params_.bits_per_filter + 7) / 8);
}

// ---------------------------------------------------------------------------

std::uint32_t shard_of(const RamboParams& params, std::string_view set_name) {
  if (params.shards < 2) invalid("shard routing needs shards > 1");
  const auto tau = derive_hasher(params.master_seed, HashRole::kShardRouter, 0, params.shards);
  return static_cast<std::uint32_t>(tau(key_digest(set_name)));
}

std::uint32_t shard_placement(const RamboParams& params, std::string_view set_name,
                              std::uint32_t r) {
  if (params.shards < 2) invalid("two-level placement needs shards > 1");
  if (params.local_buckets < 1) invalid("local_b must be >= 1");
  const auto phi =
      derive_hasher(params.master_seed, HashRole::kPartition, r, params.local_buckets);
  return params.local_buckets * shard_of(params, set_name) +
         static_cast<std::uint32_t>(phi(key_digest(set_name)));
}

RamboParams shard_piece_params(const RamboParams& global) {
  global.validate();
  if (!global.is_sharded() || global.is_shard_piece()) {
    invalid("expected a global sharded layout (shards > 1, B = shards * local_b)");
  }
  RamboParams piece = global;
  piece.buckets = global.local_buckets;
  return piece;
}

RamboIndex stack_shards(std::span<const RamboIndex> pieces) {
  if (pieces.empty()) throw Error(ErrorCode::kIncompatibleShard, "no shards to stack");
  const RamboParams& first = pieces.front().params();
  if (pieces.size() == 1 && !first.is_sharded()) return pieces.front();

  if (!first.is_shard_piece()) {
    throw Error(ErrorCode::kIncompatibleShard, "input is not a shard piece");
  }
  if (pieces.size() != first.shards) {
    throw Error(ErrorCode::kIncompatibleShard,
                "expected " + std::to_string(first.shards) + " shards, got " +
                    std::to_string(pieces.size()));
  }
  for (const auto& p : pieces) {
    if (!(p.params() == first)) {
      throw Error(ErrorCode::kIncompatibleShard, "shard headers differ");
    }
  }

  RamboParams global = first;
  global.buckets = first.shards * first.local_buckets;
  const std::uint32_t local_b = first.local_buckets;
  const std::uint32_t reps = first.repetitions;
  const std::size_t cells = std::size_t{global.buckets} * reps;

  SetRegistry registry;
  std::vector<std::vector<SetId>> members(cells);
  std::vector<BloomFilterUnit> filters;
  filters.reserve(cells);
  for (std::size_t i = 0; i < cells; ++i) filters.push_back(pieces.front().filters()[0]);

  SetId offset = 0;
  for (std::uint32_t s = 0; s < pieces.size(); ++s) {
    const RamboIndex& p = pieces[s];
    for (const auto& name : p.registry().names()) {
      if (shard_of(first, name) != s) {
        throw Error(ErrorCode::kIncompatibleShard,
                    "set '" + name + "' is not routed to shard " + std::to_string(s));
      }
      registry.add(name);
    }
    for (std::uint32_t r = 0; r < reps; ++r) {
      for (std::uint32_t b = 0; b < local_b; ++b) {
        const std::size_t dst = std::size_t{r} * global.buckets + std::size_t{s} * local_b + b;
        auto& list = members[dst];
        for (SetId id : p.members(b, r)) list.push_back(id + offset);
        filters[dst] = p.cell(b, r);
      }
    }
    offset += static_cast<SetId>(p.set_count());
  }
  return RamboIndex(global, std::move(registry), std::move(members), std::move(filters));
}

RamboIndex build_sharded(const RamboParams& params, std::span<const CorpusSet> corpus) {
  params.validate();
  if (!params.is_sharded()) {
    RamboIndex index(params);
    for (const auto& set : corpus) index.insert_set(set.name, set.terms);
    return index;
  }
  const RamboParams piece = shard_piece_params(params);
  std::vector<RamboIndex> pieces;
  pieces.reserve(params.shards);
  for (std::uint32_t s = 0; s < params.shards; ++s) pieces.emplace_back(piece);
  for (const auto& set : corpus) {
    pieces[shard_of(params, set.name)].insert_set(set.name, set.terms);
  }
  return stack_shards(pieces);
}

}  // namespace rambo
