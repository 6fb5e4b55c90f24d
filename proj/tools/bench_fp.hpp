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
#include <string>

#include <nlohmann/json.hpp>

#include "rambo/index.hpp"

namespace rambo::tools {

/// How the multiplicity parameter alpha is read when drawing V = 1 + floor(Exp).
enum class AlphaReading {
  kRate,  // Exp with rate alpha (mean 1/alpha)
  kMean,  // Exp with mean alpha
};

struct BenchConfig {
  // synthetic corpus
  std::uint32_t num_sets = 100;           // K
  std::uint32_t terms_per_set = 10000;
  std::uint32_t kmer_length = 31;
  // index
  std::uint32_t buckets = 16;
  std::uint32_t repetitions = 2;
  std::uint32_t eta = 2;
  double target_p = 0.01;
  // queries
  std::uint32_t num_queries = 1000;
  std::uint32_t term_length = 30;
  double multiplicity_alpha = 100.0;
  AlphaReading alpha_reading = AlphaReading::kRate;
  std::uint32_t v_cap = 0;                // 0 means K
  std::uint64_t seed = 1;

  void validate() const;
};

struct BenchReport {
  std::uint32_t K = 0, B = 0, R = 0, eta = 0;
  std::uint64_t m = 0;
  double realized_p = 0;             // mean fill^eta over cells

  std::uint64_t planted_queries = 0;
  std::uint64_t false_negatives = 0;
  std::uint64_t false_positive_pairs = 0;
  std::uint64_t negative_pairs = 0;
  double per_set_fp = 0;             // false_positive_pairs / negative_pairs
  double mean_multiplicity = 0;      // mean V over planted queries
  double lemma_fp_at_mean_v = 0;     // fp_rate_lemma(realized_p, B, mean V, R)
  double lemma_fp_expected = 0;      // mean over queries of fp_rate_lemma(.., V_q, ..)
  double failure_bound = 0;          // clamped union bound at mean V

  std::uint64_t absent_queries = 0;
  double absent_fp = 0;              // mean |answer| / K over never-inserted terms
  double lemma_fp_absent = 0;        // fp_rate_lemma at V = 0

  double mean_bfu_probes = 0;
  double mean_intersect_work = 0;
  double expected_query_cost = 0;    // cost model at realized p and mean V

  double build_seconds = 0;
  double query_seconds = 0;
  std::string multiplicity_law;
};

BenchReport run_bench_fp(const BenchConfig& config);

nlohmann::json to_json(const BenchReport& report);

}  // namespace rambo::tools
