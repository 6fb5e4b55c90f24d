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

// Acceptance gate: runs each numbered criterion and prints one PASS/FAIL line.
// Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "bench_fp.hpp"
#include "rambo/rambo.hpp"
#include "test_util.hpp"

namespace {

using namespace rambo;
using rambo::testing::random_dna;

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Accumulates formatted detail text and the pass flag.
class Check {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      note("FAILED: " + what);
    }
  }
  void note(const std::string& s) {
    if (!text_.empty()) text_ += "; ";
    text_ += s;
  }
  Outcome done() const { return {pass_, text_}; }

 private:
  bool pass_ = true;
  std::string text_;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool contains(const std::vector<SetId>& ids, SetId id) {
  return std::binary_search(ids.begin(), ids.end(), id);
}

RamboParams grid(std::uint32_t B, std::uint32_t R, std::uint32_t eta, std::uint64_t m,
                 std::uint64_t seed) {
  RamboParams p;
  p.buckets = B;
  p.repetitions = R;
  p.eta = eta;
  p.bits_per_filter = m;
  p.master_seed = seed;
  return p;
}

// 1 -------------------------------------------------------------------------
Outcome zero_false_negatives() {
  Check c;
  std::mt19937_64 rng(101);
  std::uint64_t pairs = 0, misses = 0;
  std::uniform_real_distribution<double> log_terms(std::log(50.0), std::log(10000.0));
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t K = trial % 2 == 0 ? 8 : 100;
    // The first K=100 corpus is the full-size one.
    const auto terms = trial == 1 ? std::size_t{10000}
                                  : static_cast<std::size_t>(std::exp(log_terms(rng)));
    const auto B = static_cast<std::uint32_t>(2 + rng() % 30);
    const auto R = static_cast<std::uint32_t>(1 + rng() % 5);
    const auto eta = static_cast<std::uint32_t>(1 + rng() % 4);
    auto corpus = rambo::testing::random_corpus(rng, K, terms, 20);
    // Shared terms so some queries have multiplicity above one.
    for (int s = 0; s < 50; ++s) {
      const auto& src = corpus[rng() % K];
      corpus[rng() % K].terms.push_back(src.terms[rng() % src.terms.size()]);
    }
    RamboParams p = grid(B, R, eta, 0, rng());
    RamboIndex idx = RamboIndex::create(p, SizingHint{K, terms, 0.01});
    for (const auto& s : corpus) idx.insert_set(s.name, s.terms);
    for (SetId id = 0; id < corpus.size(); ++id) {
      for (const auto& t : corpus[id].terms) {
        ++pairs;
        misses += !contains(idx.query_term(t).set_ids, id);
      }
    }
  }
  c.note(fmt("%llu (term, set) pairs over 20 corpora, %llu misses",
             static_cast<unsigned long long>(pairs), static_cast<unsigned long long>(misses)));
  c.require(misses == 0, "false negatives found");
  return c.done();
}

// 2 and 3 share the bench runs.
struct BenchRuns {
  std::vector<tools::BenchReport> by_r;  // R = 1, 2, 3
};

const BenchRuns& bench_runs() {
  static const BenchRuns runs = [] {
    BenchRuns out;
    for (std::uint32_t R = 1; R <= 3; ++R) {
      tools::BenchConfig cfg;
      cfg.num_sets = 100;
      cfg.buckets = 16;
      cfg.repetitions = R;
      cfg.target_p = 0.01;
      cfg.num_queries = 2000;
      cfg.seed = 1000 + R;
      out.by_r.push_back(tools::run_bench_fp(cfg));
    }
    return out;
  }();
  return runs;
}

Outcome fp_rate_against_model() {
  Check c;
  const auto& runs = bench_runs().by_r;
  for (const auto& r : runs) {
    const double ratio = r.per_set_fp / r.lemma_fp_at_mean_v;
    c.note(fmt("R=%u fp=%.5f lemma=%.5f (p=%.4f, V=%.3f) ratio=%.2f", r.R, r.per_set_fp,
               r.lemma_fp_at_mean_v, r.realized_p, r.mean_multiplicity, ratio));
    c.require(ratio >= 0.2 && ratio <= 5.0, fmt("R=%u outside [0.2x, 5x]", r.R));
    c.require(r.false_negatives == 0, "false negatives in bench");
  }
  c.require(runs[0].per_set_fp > runs[1].per_set_fp && runs[1].per_set_fp > runs[2].per_set_fp,
            "FP not strictly decreasing in R");
  return c.done();
}

Outcome fp_magnitude_at_k100() {
  Check c;
  const auto& r = bench_runs().by_r[1];
  c.note(fmt("K=100 B=16 R=2 p=0.01: per-set fp=%.5f (%s)", r.per_set_fp,
             r.multiplicity_law.c_str()));
  c.require(r.per_set_fp >= 0.001 && r.per_set_fp <= 0.05, "outside [0.001, 0.05]");

  // Alternative reading of the multiplicity parameter, reported only.
  tools::BenchConfig cfg;
  cfg.num_sets = 100;
  cfg.buckets = 16;
  cfg.repetitions = 2;
  cfg.num_queries = 1000;
  cfg.terms_per_set = 2000;
  cfg.alpha_reading = tools::AlphaReading::kMean;
  const auto alt = tools::run_bench_fp(cfg);
  c.note(fmt("info: alpha read as mean gives V=%.1f, fp=%.3f", alt.mean_multiplicity,
             alt.per_set_fp));
  return c.done();
}

// 4 -------------------------------------------------------------------------
Outcome algebraic_identity() {
  Check c;
  double worst = 0;
  int points = 0;
  for (double K : {1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9}) {
    for (double p : {0.0, 1e-4, 0.01, 0.1, 0.5}) {
      for (double B : {2.0, 16.0, 500.0, 1e4}) {
        for (double V : {0.0, 1.0, 4.0, 100.0, 1000.0}) {
          const double R = 1 + (points % 20);
          const double lhs = K * analysis::fp_rate_lemma(p, B, V, R);
          const double rhs = analysis::failure_bound_raw(K, p, B, V, R);
          const double scale = std::max(std::abs(lhs), std::abs(rhs));
          if (scale > 0) worst = std::max(worst, std::abs(lhs - rhs) / scale);
          ++points;
        }
      }
    }
  }
  c.note(fmt("%d points, max relative error %.3g", points, worst));
  c.require(points >= 1000 && worst <= 1e-12, "identity violated");
  return c.done();
}

// 5 -------------------------------------------------------------------------
Outcome repetition_bound() {
  Check c;
  int checked = 0;
  double worst = 0;
  for (double K : {2.0, 10.0, 100.0, 1e3, 1e4, 1e6, 1e8}) {
    for (double delta : {0.5, 0.1, 0.01, 1e-3, 1e-6}) {
      const double R = analysis::min_repetitions(K, delta);
      for (double B : {6.0, 8.0, 16.0, 64.0, 500.0, 1e4}) {
        const double bound = analysis::failure_bound_raw(K, 1.0 / B, B, 1, R);
        worst = std::max(worst, bound / delta);
        ++checked;
        c.require(bound <= std::exp(1.0) * delta,
                  fmt("K=%g delta=%g B=%g bound=%g", K, delta, B, bound));
      }
    }
  }
  c.note(fmt("%d (K, delta, B>=6) points, max bound/delta = %.3f (limit e)", checked, worst));
  // Below B = 6 one table's false-hit rate (2B-1)/B^2 exceeds 1/e.
  const double small = analysis::failure_bound_raw(1e4, 0.5, 2, 1, analysis::min_repetitions(1e4, 0.01));
  c.note(fmt("info: B=2 gives bound/delta=%.3g", small / 0.01));
  return c.done();
}

// 6 -------------------------------------------------------------------------
Outcome query_cost_model() {
  Check c;
  constexpr std::size_t K = 1000;
  constexpr std::uint32_t eta = 2, R = 3;
  std::mt19937_64 rng(606);
  for (std::uint32_t V : {1u, 4u, 16u}) {
    const auto B = static_cast<std::uint32_t>(std::lround(analysis::optimal_B(K, V, eta)));
    RamboIndex idx =
        RamboIndex::create(grid(B, R, eta, 0, rng()), SizingHint{K, 200, 0.01});
    std::vector<std::string> names;
    for (std::size_t i = 0; i < K; ++i) {
      names.push_back("doc" + std::to_string(i));
      SetWriter w = idx.open_set(names.back());
      for (int t = 0; t < 200; ++t) w.add(random_dna(rng, 24));
    }
    // Planted queries, each held by exactly V sets.
    constexpr int kQueries = 400;
    std::vector<std::string> queries;
    std::vector<SetId> ids(K);
    std::iota(ids.begin(), ids.end(), SetId{0});
    for (int q = 0; q < kQueries; ++q) {
      queries.push_back(random_dna(rng, 28));
      std::shuffle(ids.begin(), ids.end(), rng);
      for (std::uint32_t j = 0; j < V; ++j) idx.open_set(names[ids[j]]).add(queries.back());
    }
    const double p = analysis::realized_fp(idx);
    double literal = 0, scaled = 0;
    bool exact_probes = true;
    for (const auto& q : queries) {
      const auto res = idx.query_term(q);
      exact_probes &= res.bfu_probes == std::uint64_t{B} * R;
      literal += static_cast<double>(res.bfu_probes + res.intersect_work);
      scaled += static_cast<double>(eta * res.bfu_probes + res.intersect_work);
    }
    literal /= kQueries;
    scaled /= kQueries;
    const double expected = analysis::expected_query_cost(K, B, R, V, p, eta);
    const double ratio = literal / expected;
    c.note(fmt("V=%u B=%u p=%.4f measured=%.1f (eta-scaled %.1f) expected=%.1f ratio=%.2f", V,
               B, p, literal, scaled, expected, ratio));
    c.require(ratio >= 0.5 && ratio <= 2.0, fmt("V=%u outside 2x", V));
    c.require(exact_probes, "bfu_probes != B*R");
  }
  return c.done();
}

// 7 -------------------------------------------------------------------------
Outcome optimal_b() {
  Check c;
  std::mt19937_64 rng(707);
  int ok = 0, n = 0;
  for (int i = 0; i < 50; ++i) {
    const double K = static_cast<double>(100 + rng() % 100000);
    const double V = static_cast<double>(1 + rng() % 32);
    const double eta = static_cast<double>(1 + rng() % 10);
    const auto best = analysis::brute_force_optimal_B(K, V, eta, 5, 0.01,
                                                      static_cast<std::uint64_t>(K));
    const double closed = std::round(analysis::optimal_B(K, V, eta));
    const bool hit = std::abs(static_cast<double>(best) - closed) <= 1.0;
    ok += hit;
    ++n;
    c.require(hit, fmt("K=%g V=%g eta=%g brute=%llu closed=%g", K, V, eta,
                       static_cast<unsigned long long>(best), closed));
  }
  c.note(fmt("%d/%d triples within +-1", ok, n));
  return c.done();
}

// 8 -------------------------------------------------------------------------
Outcome gamma_oracle() {
  Check c;
  for (auto [B, V] : {std::pair{10u, 2u}, std::pair{16u, 4u}, std::pair{100u, 10u}}) {
    const auto mc = analysis::gamma_monte_carlo(B, V, 1000000);
    const double oracle = analysis::gamma_balls_in_bins(B, V);
    const double series = analysis::gamma_series(B, V);
    c.note(fmt("(B=%u,V=%u) mc=%.5f oracle=%.5f series=%.5f (series-oracle=%+.4f)", B, V,
               mc.mean, oracle, series, series - oracle));
    c.require(std::abs(mc.mean - oracle) <= 0.005, "Monte-Carlo disagrees with oracle");
    c.require(mc.mean > 1.0 / V && mc.mean <= 1.0, "estimate outside (1/V, 1]");
    c.require(oracle > 1.0 / V && oracle < 1.0, "oracle outside (1/V, 1)");
  }
  return c.done();
}

// 9 -------------------------------------------------------------------------
Outcome fold_exactness() {
  Check c;
  std::mt19937_64 rng(909);
  const auto corpus = rambo::testing::random_corpus(rng, 100, 2000, 24);
  const std::uint64_t m = filter_bits_for(grid(64, 2, 2, 0, 0), SizingHint{100, 2000, 0.01});
  const auto wide = rambo::testing::build_index(grid(64, 2, 2, m, 42), corpus);
  const auto direct = rambo::testing::build_index(grid(32, 2, 2, m, 42), corpus);
  c.require(storage::serialize(wide.fold()) == storage::serialize(direct),
            "fold differs from direct B/2 build");

  std::vector<std::string> probes;
  for (int i = 0; i < 1000; ++i) probes.push_back(random_dna(rng, 30));
  std::vector<RamboIndex> levels{wide};
  for (int i = 0; i < 3; ++i) levels.push_back(levels.back().fold());

  bool superset = true, halving = true, monotone = true;
  std::vector<double> fp;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    std::uint64_t hits = 0;
    for (const auto& q : probes) {
      const auto got = levels[l].query_term(q).set_ids;
      hits += got.size();
      if (l > 0) {
        const auto prev = levels[l - 1].query_term(q).set_ids;
        superset &= std::includes(got.begin(), got.end(), prev.begin(), prev.end());
      }
    }
    fp.push_back(static_cast<double>(hits) / (1000.0 * 100.0));
    if (l > 0) {
      halving &= levels[l - 1].grid_bytes() == 2 * levels[l].grid_bytes();
      monotone &= fp[l] >= fp[l - 1];
    }
  }
  c.note(fmt("fold == direct build: %s; FP B=64/32/16/8: %.4f %.4f %.4f %.4f; grid bytes %llu -> %llu",
             storage::serialize(wide.fold()) == storage::serialize(direct) ? "yes" : "no", fp[0],
             fp[1], fp[2], fp[3], static_cast<unsigned long long>(levels[0].grid_bytes()),
             static_cast<unsigned long long>(levels[3].grid_bytes())));
  c.require(superset, "fold lost a previously reported set");
  c.require(halving, "grid did not halve");
  c.require(monotone, "FP decreased after a fold");
  return c.done();
}

// 10 ------------------------------------------------------------------------
Outcome sharded_exactness() {
  Check c;
  std::mt19937_64 rng(1010);
  RamboParams p = grid(32, 3, 2, 8192, 77);
  p.shards = 4;
  p.local_buckets = 8;
  const auto corpus = rambo::testing::random_corpus(rng, 60, 300, 24);

  // Independent pieces written to disk, then stacked from the files.
  rambo::testing::TempDir dir;
  std::vector<RamboIndex> pieces(4, RamboIndex(shard_piece_params(p)));
  for (const auto& s : corpus) pieces[shard_of(p, s.name)].insert_set(s.name, s.terms);
  std::vector<std::filesystem::path> files;
  for (int i = 0; i < 4; ++i) {
    files.push_back(dir / ("piece" + std::to_string(i)));
    storage::save_index(pieces[i], files.back());
  }
  const auto stacked = storage::stack_shards(files);

  // Monolithic reference over the same global grid, shard-major insertion order.
  RamboIndex mono(p);
  for (std::uint32_t s = 0; s < 4; ++s) {
    for (const auto& set : corpus) {
      if (shard_of(p, set.name) == s) mono.insert_set(set.name, set.terms);
    }
  }
  bool placement_ok = true;
  for (const auto& set : corpus) {
    for (std::uint32_t r = 0; r < 3; ++r) {
      placement_ok &= mono.placement(set.name, r) == shard_placement(p, set.name, r);
    }
  }
  const bool identical = storage::serialize(stacked) == storage::serialize(mono);
  c.require(placement_ok, "monolithic placement differs from two-level placement");
  c.require(identical, "stacked bytes differ from monolithic bytes");

  std::vector<double> shard_counts(4, 0), bucket_counts(32, 0);
  constexpr int kNames = 10000;
  for (int i = 0; i < kNames; ++i) {
    const std::string name = "genome_" + std::to_string(i);
    ++shard_counts[shard_of(p, name)];
    ++bucket_counts[shard_placement(p, name, 0)];
  }
  auto chi2 = [](const std::vector<double>& counts) {
    const double e = static_cast<double>(kNames) / static_cast<double>(counts.size());
    double x = 0;
    for (double o : counts) x += (o - e) * (o - e) / e;
    return x;
  };
  const double x_shard = chi2(shard_counts), x_bucket = chi2(bucket_counts);
  c.note(fmt("stacked == monolithic: %s; chi2 shards=%.2f (<16.266), buckets=%.2f (<61.098)",
             identical ? "yes" : "no", x_shard, x_bucket));
  c.require(x_shard < 16.266, "shard routing not uniform");
  c.require(x_bucket < 61.098, "global buckets not uniform");
  return c.done();
}

// 11 ------------------------------------------------------------------------
Outcome sequence_early_exit() {
  Check c;
  std::mt19937_64 rng(1111);
  constexpr std::uint32_t k = 31, B = 16, R = 3;
  RamboParams p = grid(B, R, 2, 0, 5);
  p.kgram = k;
  RamboIndex idx = RamboIndex::create(p, SizingHint{50, 2000, 0.01});
  std::vector<std::string> seqs;
  std::unordered_set<std::string> all_grams;
  for (int i = 0; i < 50; ++i) {
    seqs.push_back(random_dna(rng, 2000 + k - 1));
    idx.insert_set("set" + std::to_string(i), ingest::kgram_tokens(seqs.back(), k));
    for (auto g : ingest::kgram_tokens(seqs.back(), k)) all_grams.emplace(g);
  }
  const std::string host_seq = seqs[17].substr(500, 301);
  std::string probe = host_seq;
  const std::size_t mid = probe.size() / 2;
  probe[mid] = probe[mid] == 'A' ? 'T' : 'A';
  const std::string middle = probe.substr(mid - k / 2, k);
  c.require(!all_grams.contains(middle), "middle k-gram not globally absent");

  const auto absent = idx.query_sequence(probe);
  const std::uint64_t windows = probe.size() - k + 1;
  c.require(absent.set_ids.empty(), "sequence with an absent k-gram returned sets");
  c.require(absent.bfu_probes < windows * B * R, "no early exit");

  const auto present = idx.query_sequence(host_seq);
  c.require(contains(present.set_ids, 17), "host set missing");
  c.note(fmt("absent-middle: %zu sets, %llu probes < %llu (windows*B*R); full: %zu sets incl. host",
             absent.set_ids.size(), static_cast<unsigned long long>(absent.bfu_probes),
             static_cast<unsigned long long>(windows * B * R), present.set_ids.size()));
  return c.done();
}

// 12 ------------------------------------------------------------------------
Outcome serialization() {
  Check c;
  std::mt19937_64 rng(1212);
  const auto corpus = rambo::testing::random_corpus(rng, 40, 500, 24);
  const auto idx = rambo::testing::build_index(grid(12, 3, 3, 5003, 8), corpus);
  rambo::testing::TempDir dir;
  storage::save_index(idx, dir / "a.rmb");
  storage::save_index(idx, dir / "b.rmb");
  const auto a = rambo::testing::read_file(dir / "a.rmb");
  const auto b = rambo::testing::read_file(dir / "b.rmb");
  c.require(a == b, "two saves differ");
  const auto back = storage::load_index(dir / "a.rmb");
  c.require(back == idx && storage::serialize(back) == a, "round trip not bit-identical");

  int rejected = 0;
  constexpr int kTrials = 100;
  for (int i = 0; i < kTrials; ++i) {
    auto bad = a;
    bad[rng() % bad.size()] ^= static_cast<std::uint8_t>(1 + rng() % 255);
    {
      std::ofstream out(dir / "bad.rmb", std::ios::binary | std::ios::trunc);
      out.write(reinterpret_cast<const char*>(bad.data()), static_cast<std::streamsize>(bad.size()));
    }
    try {
      storage::load_index(dir / "bad.rmb");
    } catch (const Error& e) {
      rejected += e.code() == ErrorCode::kCorruptIndex;
    }
  }
  c.note(fmt("%zu-byte file round-trips; %d/%d corrupted copies rejected", a.size(), rejected,
             kTrials));
  c.require(rejected == kTrials, "corruption accepted");
  return c.done();
}

// 13 ------------------------------------------------------------------------
Outcome expected_memory_sanity() {
  Check c;
  constexpr std::size_t K = 100, kKeys = 50000;
  constexpr std::uint32_t V = 2, B = 10;
  constexpr double p = 0.01;
  const auto opt = log2_bloom_params(p, 1);
  // R = ceil(ln K), the log K of the memory estimate.
  const auto R = analysis::min_repetitions(K, 1.0);
  std::mt19937_64 rng(1313);

  std::vector<CorpusSet> corpus(K);
  for (std::size_t i = 0; i < K; ++i) corpus[i].name = "s" + std::to_string(i);
  for (std::size_t key = 0; key < kKeys; ++key) {
    const std::string term = random_dna(rng, 26);
    const auto first = rng() % K;
    auto second = rng() % (K - 1);
    if (second >= first) ++second;
    corpus[first].terms.push_back(term);
    corpus[second].terms.push_back(term);
  }
  const std::uint64_t N = kKeys * V;
  RamboParams params = grid(B, R, opt.eta, 0, 13);
  const RamboIndex idx = RamboIndex::create(params, SizingHint{K, N / K, p});
  const double grid_bits = static_cast<double>(idx.grid_bytes()) * 8.0;
  const auto est = analysis::expected_memory(B, V, K, p, static_cast<double>(N));
  const double ratio = grid_bits / est.bits;
  c.note(fmt("K=100 B=%u R=%u eta=%u m=%llu N=%llu: grid=%.0f bits expected=%.0f ratio=%.2f", B,
             R, opt.eta, static_cast<unsigned long long>(idx.filter_bits()),
             static_cast<unsigned long long>(N), grid_bits, est.bits, ratio));
  c.require(ratio >= 1.0 / 3.0 && ratio <= 3.0, "grid size outside 3x of expected memory");
  return c.done();
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "zero false negatives", zero_false_negatives},
      {2, "false-positive rate against fp_rate_lemma", fp_rate_against_model},
      {3, "false-positive magnitude at K=100", fp_magnitude_at_k100},
      {4, "union bound equals K times lemma", algebraic_identity},
      {5, "repetition bound", repetition_bound},
      {6, "query cost model", query_cost_model},
      {7, "optimal B", optimal_b},
      {8, "gamma Monte-Carlo oracle", gamma_oracle},
      {9, "fold exactness", fold_exactness},
      {10, "sharded build exactness", sharded_exactness},
      {11, "sequence query early exit", sequence_early_exit},
      {12, "serialization", serialization},
      {13, "expected memory sanity", expected_memory_sanity},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %2d %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", cr.id, cr.name, secs,
                o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
