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

#include "bench_fp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>
#include <vector>

#include "rambo/analysis.hpp"
#include "rambo/error.hpp"
#include "rambo/ingest.hpp"

namespace rambo::tools {
namespace {

using Clock = std::chrono::steady_clock;

std::string random_dna(std::mt19937_64& rng, std::size_t len) {
  static constexpr char kBases[4] = {'A', 'C', 'G', 'T'};
  std::string s(len, 'A');
  for (auto& c : s) c = kBases[rng() & 3];
  return s;
}

std::string set_name(std::uint32_t i) {
  std::ostringstream os;
  os << "set" << i;
  return os.str();
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

void BenchConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kInvalidParameter, what);
  };
  require(num_sets >= 1, "K must be >= 1");
  require(num_queries >= 1, "num_queries must be >= 1");
  require(term_length >= 1, "term_length must be >= 1");
  require(kmer_length >= 1, "kmer length must be >= 1");
  require(multiplicity_alpha > 0.0, "alpha must be > 0");
  require(target_p > 0.0 && target_p < 1.0, "target p must lie in (0, 1)");
  require(term_length != kmer_length, "query terms must differ in length from corpus k-mers");
}

BenchReport run_bench_fp(const BenchConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);

  RamboParams params;
  params.buckets = config.buckets;
  params.repetitions = config.repetitions;
  params.eta = config.eta;
  params.kgram = config.kmer_length;
  params.master_seed = config.seed;
  const SizingHint hint{config.num_sets, config.terms_per_set, config.target_p};
  RamboIndex index = RamboIndex::create(params, hint);

  BenchReport rep;
  rep.K = config.num_sets;
  rep.B = index.buckets();
  rep.R = index.repetitions();
  rep.eta = config.eta;
  rep.m = index.filter_bits();

  // Corpus: one random sequence per set, indexed as stride-1 k-mers.
  const auto t_build = Clock::now();
  std::vector<std::string> names;
  names.reserve(config.num_sets);
  for (std::uint32_t i = 0; i < config.num_sets; ++i) {
    names.push_back(set_name(i));
    const std::string seq = random_dna(rng, config.terms_per_set + config.kmer_length - 1);
    SetWriter w = index.open_set(names.back());
    for (auto gram : ingest::kgram_tokens(seq, config.kmer_length)) w.add(gram);
  }

  // Planted queries: each goes into V distinct sets chosen uniformly.
  const std::uint32_t cap =
      std::min(config.num_sets, config.v_cap == 0 ? config.num_sets : config.v_cap);
  std::exponential_distribution<double> expo(config.alpha_reading == AlphaReading::kRate
                                                 ? config.multiplicity_alpha
                                                 : 1.0 / config.multiplicity_alpha);
  {
    std::ostringstream law;
    law << "V = min(" << cap << ", 1 + floor(Exp("
        << (config.alpha_reading == AlphaReading::kRate ? "rate" : "mean") << "="
        << config.multiplicity_alpha << ")))";
    rep.multiplicity_law = law.str();
  }

  std::vector<std::string> planted;
  std::vector<std::vector<SetId>> hosts;
  std::unordered_set<std::string> used;
  std::vector<SetId> ids(config.num_sets);
  std::iota(ids.begin(), ids.end(), SetId{0});
  while (planted.size() < config.num_queries) {
    std::string term = random_dna(rng, config.term_length);
    if (!used.insert(term).second) continue;
    const auto v = static_cast<std::uint32_t>(
        std::min<double>(cap, 1.0 + std::floor(expo(rng))));
    for (std::uint32_t j = 0; j < v; ++j) {
      std::uniform_int_distribution<std::uint32_t> pick(j, config.num_sets - 1);
      std::swap(ids[j], ids[pick(rng)]);
    }
    std::vector<SetId> h(ids.begin(), ids.begin() + v);
    std::sort(h.begin(), h.end());
    for (SetId id : h) index.open_set(names[id]).add(term);
    planted.push_back(std::move(term));
    hosts.push_back(std::move(h));
  }
  rep.build_seconds = seconds_since(t_build);
  rep.realized_p = analysis::realized_fp(index);

  const auto t_query = Clock::now();
  double v_sum = 0, lemma_sum = 0, probes = 0, work = 0;
  for (std::size_t q = 0; q < planted.size(); ++q) {
    const QueryResult res = index.query_term(planted[q]);
    const auto& h = hosts[q];
    std::vector<SetId> hit;
    std::set_intersection(res.set_ids.begin(), res.set_ids.end(), h.begin(), h.end(),
                          std::back_inserter(hit));
    rep.false_negatives += h.size() - hit.size();
    rep.false_positive_pairs += res.set_ids.size() - hit.size();
    rep.negative_pairs += config.num_sets - h.size();
    v_sum += static_cast<double>(h.size());
    lemma_sum += analysis::fp_rate_lemma(rep.realized_p, rep.B, static_cast<double>(h.size()), rep.R);
    probes += static_cast<double>(res.bfu_probes);
    work += static_cast<double>(res.intersect_work);
  }
  rep.planted_queries = planted.size();

  std::uint64_t absent_hits = 0;
  while (rep.absent_queries < config.num_queries) {
    std::string term = random_dna(rng, config.term_length);
    if (used.contains(term)) continue;
    absent_hits += index.query_term(term).set_ids.size();
    ++rep.absent_queries;
  }
  rep.query_seconds = seconds_since(t_query);

  const double nq = static_cast<double>(rep.planted_queries);
  rep.per_set_fp = rep.negative_pairs == 0
                       ? 0.0
                       : static_cast<double>(rep.false_positive_pairs) / rep.negative_pairs;
  rep.mean_multiplicity = v_sum / nq;
  rep.lemma_fp_at_mean_v =
      analysis::fp_rate_lemma(rep.realized_p, rep.B, rep.mean_multiplicity, rep.R);
  rep.lemma_fp_expected = lemma_sum / nq;
  rep.failure_bound =
      analysis::failure_bound(rep.K, rep.realized_p, rep.B, rep.mean_multiplicity, rep.R);
  rep.absent_fp = static_cast<double>(absent_hits) /
                  (static_cast<double>(rep.absent_queries) * config.num_sets);
  rep.lemma_fp_absent = analysis::fp_rate_lemma(rep.realized_p, rep.B, 0.0, rep.R);
  rep.mean_bfu_probes = probes / nq;
  rep.mean_intersect_work = work / nq;
  rep.expected_query_cost = analysis::expected_query_cost(
      rep.K, rep.B, rep.R, rep.mean_multiplicity, rep.realized_p, rep.eta);
  return rep;
}

nlohmann::json to_json(const BenchReport& r) {
  return {
      {"K", r.K},
      {"B", r.B},
      {"R", r.R},
      {"eta", r.eta},
      {"m", r.m},
      {"realized_p", r.realized_p},
      {"multiplicity_law", r.multiplicity_law},
      {"planted_queries", r.planted_queries},
      {"false_negatives", r.false_negatives},
      {"false_positive_pairs", r.false_positive_pairs},
      {"negative_pairs", r.negative_pairs},
      {"per_set_fp", r.per_set_fp},
      {"mean_multiplicity", r.mean_multiplicity},
      {"lemma_fp_at_mean_v", r.lemma_fp_at_mean_v},
      {"lemma_fp_expected", r.lemma_fp_expected},
      {"failure_bound", r.failure_bound},
      {"absent_queries", r.absent_queries},
      {"absent_fp", r.absent_fp},
      {"lemma_fp_absent", r.lemma_fp_absent},
      {"mean_bfu_probes", r.mean_bfu_probes},
      {"mean_intersect_work", r.mean_intersect_work},
      {"expected_query_cost", r.expected_query_cost},
      {"build_seconds", r.build_seconds},
      {"query_seconds", r.query_seconds},
  };
}

}  // namespace rambo::tools
