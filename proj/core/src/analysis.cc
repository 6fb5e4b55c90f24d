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

#include "rambo/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "rambo/error.hpp"

namespace rambo::analysis {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kInvalidParameter, what);
}

// (1 - 1/B)^V without cancellation for large B.
double miss_all(double B, double V) { return std::exp(V * std::log1p(-1.0 / B)); }

// 1 - (1 - 1/B)^V, accurate when it is tiny.
double hit_any(double B, double V) { return -std::expm1(V * std::log1p(-1.0 / B)); }

}  // namespace

void AnalysisInput::validate() const {
  require(p >= 0.0 && p <= 1.0, "p must lie in [0, 1]");
  require(delta > 0.0 && delta <= 1.0, "delta must lie in (0, 1]");
  require(V >= 0.0, "V must be >= 0");
  require(B >= 2.0, "B must be >= 2");
  require(K >= 1.0, "K must be >= 1");
  require(R >= 1.0, "R must be >= 1");
  require(eta >= 1.0, "eta must be >= 1");
}

double fp_rate_lemma(double p, double B, double V, double R) {
  return std::pow(p * miss_all(B, V) + hit_any(B, V), R);
}

double failure_bound_raw(double K, double p, double B, double V, double R) {
  // 1 - (1 - p) q expanded as (1 - q) + p q
  return K * std::pow(hit_any(B, V) + p * miss_all(B, V), R);
}

double failure_bound(double K, double p, double B, double V, double R) {
  return std::clamp(failure_bound_raw(K, p, B, V, R), 0.0, 1.0);
}

std::uint32_t min_repetitions(double K, double delta) {
  require(K >= 1.0, "K must be >= 1");
  require(delta > 0.0 && delta <= 1.0, "delta must lie in (0, 1]");
  const double r = std::ceil(std::log(K) - std::log(delta));
  return static_cast<std::uint32_t>(std::max(1.0, r));
}

double expected_query_cost(double K, double B, double R, double V, double p, double eta) {
  return B * R * eta + (K / B) * (V + B * p) * R;
}

double optimal_B(double K, double V, double eta) {
  require(K >= 1.0 && V >= 1.0 && eta >= 1.0, "optimal_B needs K, V, eta >= 1");
  return std::sqrt(K * V / eta);
}

std::uint64_t brute_force_optimal_B(double K, double V, double eta, double R, double p,
                                    std::uint64_t max_b) {
  std::uint64_t best = 2;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::uint64_t b = 2; b <= std::max<std::uint64_t>(max_b, 2); ++b) {
    const double c = expected_query_cost(K, static_cast<double>(b), R, V, p, eta);
    if (c < best_cost) {
      best_cost = c;
      best = b;
    }
  }
  return best;
}

double gamma_series(double B, std::uint32_t V) {
  require(B >= 2.0 && V >= 1, "gamma needs B >= 2, V >= 1");
  double sum = 0.0;
  for (std::uint32_t v = 1; v <= V; ++v) {
    const double exponent = static_cast<double>(V) - 2.0 * v + 1.0;
    // log-space keeps (B-1)^x / B^(V-1) finite for large V
    const double log_term = exponent * std::log(B - 1.0) - (V - 1.0) * std::log(B);
    sum += std::exp(log_term) / v;
  }
  return sum;
}

double gamma_balls_in_bins(double B, std::uint32_t V) {
  require(B >= 2.0 && V >= 1, "gamma needs B >= 2, V >= 1");
  return B * -std::expm1(V * std::log1p(-1.0 / B)) / V;
}

MonteCarloEstimate gamma_monte_carlo(std::uint32_t B, std::uint32_t V, std::uint64_t trials,
                                     std::uint64_t seed) {
  require(trials >= 1, "trials must be >= 1");
  require(B >= 1 && V >= 1, "B and V must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> bin(0, B - 1);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    // Ball 0 is the tagged ball; count the others sharing its bin.
    const std::uint32_t tagged = bin(rng);
    std::uint32_t occupancy = 1;
    for (std::uint32_t i = 1; i < V; ++i) occupancy += bin(rng) == tagged;
    const double x = 1.0 / occupancy;
    sum += x;
    sum_sq += x * x;
  }
  const double n = static_cast<double>(trials);
  const double mean = sum / n;
  const double var = trials > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
  return {mean, std::sqrt(var / n), trials};
}

MemoryEstimate expected_memory(double B, std::uint32_t V, double K, double p,
                               double total_insertions) {
  require(K >= 1.0, "K must be >= 1");
  require(p > 0.0 && p < 1.0, "p must lie in (0, 1)");
  MemoryEstimate est;
  est.gamma = gamma_balls_in_bins(B, V);
  est.gamma_series = gamma_series(B, V);
  est.bits = est.gamma * std::log(K) * std::log2(1.0 / p) * total_insertions;
  return est;
}

// ---------------------------------------------------------------------------

void InvertedIndexOracle::add(std::string_view term, SetId set) {
  auto& list = postings_[std::string(term)];
  auto it = std::lower_bound(list.begin(), list.end(), set);
  if (it == list.end() || *it != set) list.insert(it, set);
}

std::vector<SetId> InvertedIndexOracle::query(std::string_view term) const {
  auto it = postings_.find(std::string(term));
  return it == postings_.end() ? std::vector<SetId>{} : it->second;
}

InvertedIndexOracle oracle_build(std::span<const CorpusSet> corpus) {
  InvertedIndexOracle oracle;
  SetRegistry ids;
  for (const auto& set : corpus) {
    const SetId id = ids.add(set.name);
    for (const auto& t : set.terms) oracle.add(t, id);
  }
  return oracle;
}

double realized_fp(const RamboIndex& index) {
  const auto filters = index.filters();
  if (filters.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& f : filters) sum += std::pow(f.fill_ratio(), f.eta());
  return sum / static_cast<double>(filters.size());
}

}  // namespace rambo::analysis
