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
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rambo/hashing.hpp"
#include "rambo/index.hpp"

namespace rambo::analysis {

/// Parameters shared by the closed-form evaluators.
struct AnalysisInput {
  double K = 1;      // number of sets
  double B = 2;      // buckets per table
  double R = 1;      // repetitions
  double V = 1;      // multiplicity: sets containing the query
  double p = 0.01;   // BFU false-positive rate
  double eta = 2;    // hashes per BFU
  double delta = 0.01;

  /// Throws kInvalidParameter outside 0<=p<=1, 0<delta<=1, V>=0, B>=2, K>=1, R>=1, eta>=1.
  void validate() const;
};

/// Per-set false-positive probability of the grid:
/// (p (1 - 1/B)^V + 1 - (1 - 1/B)^V)^R.
double fp_rate_lemma(double p, double B, double V, double R);

/// Union bound over K sets: K (1 - (1 - p)(1 - 1/B)^V)^R, unclamped.
double failure_bound_raw(double K, double p, double B, double V, double R);
/// Same, clamped to [0, 1] for reporting.
double failure_bound(double K, double p, double B, double V, double R);

/// max(1, ceil(ln K - ln delta)).
std::uint32_t min_repetitions(double K, double delta);

/// B R eta + (K / B)(V + B p) R.
double expected_query_cost(double K, double B, double R, double V, double p, double eta);

/// sqrt(K V / eta), the continuous minimiser of expected_query_cost over B.
double optimal_B(double K, double V, double eta);

/// Integer B in [2, max_b] minimising expected_query_cost (ties go to the smaller B).
std::uint64_t brute_force_optimal_B(double K, double V, double eta, double R, double p,
                                    std::uint64_t max_b);

/// The memory factor series: sum_{v=1..V} (1/v) (B-1)^{V-2v+1} / B^{V-1}.
double gamma_series(double B, std::uint32_t V);

/// E[1/v] where v is the occupancy of a tagged ball's bin after throwing V
/// balls into B bins: B (1 - (1 - 1/B)^V) / V.
double gamma_balls_in_bins(double B, std::uint32_t V);

struct MonteCarloEstimate {
  double mean = 0;
  double std_error = 0;
  std::uint64_t trials = 0;
};

/// Empirical E[1/v]; deterministic for a given seed.
MonteCarloEstimate gamma_monte_carlo(std::uint32_t B, std::uint32_t V, std::uint64_t trials,
                                     std::uint64_t seed = 0x5eed);

struct MemoryEstimate {
  double bits = 0;            // gamma_balls_in_bins * ln K * log2(1/p) * N
  double gamma = 0;           // gamma_balls_in_bins(B, V)
  double gamma_series = 0;   // gamma_series(B, V)
};

MemoryEstimate expected_memory(double B, std::uint32_t V, double K, double p,
                               double total_insertions);

/// Exact term -> sorted set-id postings; ground truth for membership checks.
class InvertedIndexOracle {
 public:
  void add(std::string_view term, SetId set);
  /// Sorted, duplicate-free postings for a term (empty if never added).
  std::vector<SetId> query(std::string_view term) const;

  std::size_t term_count() const noexcept { return postings_.size(); }
  const std::unordered_map<std::string, std::vector<SetId>>& postings() const noexcept {
    return postings_;
  }

 private:
  std::unordered_map<std::string, std::vector<SetId>> postings_;
};

/// Set ids follow corpus order, matching an index built by inserting the corpus in order.
InvertedIndexOracle oracle_build(std::span<const CorpusSet> corpus);
inline std::vector<SetId> oracle_query(const InvertedIndexOracle& oracle, std::string_view term) {
  return oracle.query(term);
}

/// Mean of fill^eta over all cells: the realized BFU false-positive rate.
double realized_fp(const RamboIndex& index);

}  // namespace rambo::analysis
