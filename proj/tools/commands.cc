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

#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bench_fp.hpp"
#include "rambo/analysis.hpp"
#include "rambo/error.hpp"
#include "rambo/index.hpp"
#include "rambo/ingest.hpp"
#include "rambo/storage.hpp"

namespace rambo::tools {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct GlobalOptions {
  std::uint64_t seed = 1;
  std::string index;
  bool json = false;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParameter: return kExitUsage;
    case ErrorCode::kCorruptIndex: return kExitCorruptIndex;
    default: return kExitDataError;
  }
}

bool is_pow2(std::uint64_t x) { return x != 0 && (x & (x - 1)) == 0; }

std::uint32_t nearest_pow2(double x) {
  std::uint32_t lo = 2;
  while (std::uint64_t{lo} * 2 <= x) lo *= 2;
  const std::uint32_t hi = lo * 2;
  return (x - lo <= hi - x) ? lo : hi;
}

void require_index(const GlobalOptions& g) {
  if (g.index.empty()) throw UsageError("--index is required");
}

std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  for (std::string t; is >> t;) out.push_back(t);
  return out;
}

std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  return read_lines(in);
}

std::uint64_t total_popcount(const RamboIndex& index) {
  std::uint64_t n = 0;
  for (const auto& f : index.filters()) n += f.popcount();
  return n;
}

std::string join_names(const RamboIndex& index, const std::vector<SetId>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) s += ',';
    s += index.registry().name(ids[i]);
  }
  return s;
}

/// Mean fraction of sets reported for each probe term.
double probe_fp(const RamboIndex& index, const std::vector<std::string>& probes) {
  if (probes.empty() || index.set_count() == 0) return 0.0;
  double hits = 0;
  for (const auto& p : probes) hits += static_cast<double>(index.query_term(p).set_ids.size());
  return hits / (static_cast<double>(probes.size()) * static_cast<double>(index.set_count()));
}

// ---------------------------------------------------------------------------

struct BuildOptions {
  std::string corpus;
  std::string kind = "sequence";
  std::uint32_t k = 31;
  std::uint32_t buckets = 0;
  std::uint32_t repetitions = 2;
  std::uint32_t eta = 2;
  double p = 0.01;
  std::uint64_t m = 0;
  std::size_t sample = 10;
  bool foldable = false;
  std::uint32_t shards = 1;
  std::uint32_t local_b = 0;
  std::string stoplist;
};

int cmd_build(const GlobalOptions& g, const BuildOptions& o, std::ostream& out,
              std::ostream& err) {
  require_index(g);
  ingest::CorpusSpec spec;
  spec.root = o.corpus;
  spec.kind = o.kind == "document" ? ingest::CorpusKind::kDocument : ingest::CorpusKind::kSequence;
  spec.k = o.k;
  if (!o.stoplist.empty()) spec.stoplist = fs::path(o.stoplist);

  if (o.foldable && o.buckets != 0 && !is_pow2(o.buckets)) {
    throw UsageError("--foldable needs a power-of-two B, got " + std::to_string(o.buckets));
  }

  const auto t0 = Clock::now();
  ingest::CorpusReader reader(spec);
  const std::size_t k_est = reader.size();
  const double avg = k_est == 0 ? 0.0 : ingest::sample_avg_cardinality(spec, o.sample);

  RamboParams params;
  params.repetitions = o.repetitions;
  params.eta = o.eta;
  params.kgram = o.k;
  params.master_seed = g.seed;
  params.shards = o.shards;
  if (o.shards > 1) {
    if (o.local_b == 0) throw UsageError("--shards > 1 needs --local-b");
    params.local_buckets = o.local_b;
    params.buckets = o.shards * o.local_b;
    if (o.buckets != 0 && o.buckets != params.buckets) {
      throw UsageError("--B must equal shards * local-b");
    }
    if (o.foldable && !is_pow2(params.buckets)) {
      throw UsageError("--foldable needs shards * local-b to be a power of two");
    }
  } else if (o.buckets != 0) {
    params.buckets = o.buckets;
  } else {
    const double best =
        analysis::optimal_B(std::max<double>(1.0, static_cast<double>(k_est)), 1.0, o.eta);
    params.buckets = o.foldable ? nearest_pow2(best)
                                : std::max<std::uint32_t>(2, static_cast<std::uint32_t>(std::lround(best)));
  }
  params.bits_per_filter = o.m;
  const SizingHint hint{k_est, static_cast<std::uint64_t>(std::llround(avg)), o.p};
  if (params.bits_per_filter == 0) params.bits_per_filter = filter_bits_for(params, hint);
  params.validate();

  RamboIndex index(params);
  std::vector<std::string> shard_files;
  if (params.is_sharded()) {
    std::vector<RamboIndex> pieces(params.shards, RamboIndex(shard_piece_params(params)));
    reader.for_each_set([&](const std::string& name, std::size_t file) {
      SetWriter w = pieces[shard_of(params, name)].open_set(name);
      reader.for_each_term(file, [&](std::string_view t) { w.add(t); });
    });
    std::vector<fs::path> paths;
    for (std::uint32_t s = 0; s < params.shards; ++s) {
      paths.emplace_back(g.index + ".shard" + std::to_string(s));
      storage::save_index(pieces[s], paths.back());
      shard_files.push_back(paths.back().string());
    }
    index = storage::stack_shards(paths);
  } else {
    reader.for_each_set([&](const std::string& name, std::size_t file) {
      SetWriter w = index.open_set(name);
      reader.for_each_term(file, [&](std::string_view t) { w.add(t); });
    });
  }
  storage::save_index(index, g.index);
  const double seconds = std::chrono::duration<double>(Clock::now() - t0).count();

  for (const auto& e : reader.errors()) err << "error: " << e.path.string() << ": " << e.message << "\n";
  for (const auto& w : reader.warnings()) err << "warning: " << w.path.string() << ": " << w.message << "\n";

  const json report = {
      {"index", g.index},
      {"K", index.set_count()},
      {"B", index.buckets()},
      {"R", index.repetitions()},
      {"eta", params.eta},
      {"m", index.filter_bits()},
      {"k", params.kgram},
      {"sampled_avg_cardinality", avg},
      {"bits_set", total_popcount(index)},
      {"grid_bytes", index.grid_bytes()},
      {"shard_files", shard_files},
      {"file_errors", reader.errors().size()},
      {"build_seconds", seconds},
  };
  if (g.json) {
    out << report.dump(2) << "\n";
  } else {
    out << "K=" << index.set_count() << " B=" << index.buckets() << " R=" << index.repetitions()
        << " m=" << index.filter_bits() << " bits_set=" << total_popcount(index)
        << " build_seconds=" << seconds << "\n";
    for (const auto& f : shard_files) out << "shard " << f << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct QueryOptions {
  std::vector<std::string> queries;
  std::string queries_file;
  bool sequence = false;
  std::string mode = "term";
  bool probes = false;
};

int cmd_query(const GlobalOptions& g, const QueryOptions& o, std::ostream& out,
              std::ostream& err, std::istream& in) {
  require_index(g);
  const RamboIndex index = storage::load_index(g.index);
  std::vector<std::string> lines = o.queries;
  if (!o.queries_file.empty()) {
    auto more = o.queries_file == "-" ? read_lines(in) : read_lines(fs::path(o.queries_file));
    lines.insert(lines.end(), more.begin(), more.end());
  } else if (lines.empty()) {
    lines = read_lines(in);
  }
  const QueryMode mode = o.mode == "bucket" ? QueryMode::kBucketConjunction : QueryMode::kTermAtATime;

  json rows = json::array();
  int failures = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line = trim(lines[i]);
    try {
      QueryResult res;
      if (o.sequence) {
        std::string seq;
        for (char c : line) {
          if (!std::isspace(static_cast<unsigned char>(c))) seq.push_back(c);
        }
        res = index.query_sequence(seq);
      } else {
        const auto terms = split_ws(line);
        res = terms.size() == 1 ? index.query_term(terms.front()) : index.query_terms(terms, mode);
      }
      if (g.json) {
        json names = json::array();
        for (SetId id : res.set_ids) names.push_back(index.registry().name(id));
        rows.push_back({{"query", line},
                        {"sets", names},
                        {"bfu_probes", res.bfu_probes},
                        {"intersect_work", res.intersect_work}});
      } else {
        out << line << '\t' << join_names(index, res.set_ids);
        if (o.probes) out << '\t' << res.bfu_probes << '\t' << res.intersect_work;
        out << '\n';
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInvalidQuery) throw;
      err << "query " << (i + 1) << ": " << e.what() << "\n";
      ++failures;
    }
  }
  if (g.json) out << rows.dump(2) << "\n";
  return failures == 0 ? kExitOk : kExitDataError;
}

// ---------------------------------------------------------------------------

struct FoldOptions {
  std::string out;
  std::uint32_t times = 1;
  std::string probes;
};

int cmd_fold(const GlobalOptions& g, const FoldOptions& o, std::ostream& out) {
  require_index(g);
  if (o.out.empty()) throw UsageError("--out is required");
  RamboIndex index = storage::load_index(g.index);
  const std::uint64_t b0 = index.buckets();
  if (o.times >= 32 || b0 % (std::uint64_t{1} << o.times) != 0) {
    throw Error(ErrorCode::kCannotFold, "B = " + std::to_string(b0) + " is not divisible by 2^" +
                                            std::to_string(o.times));
  }
  std::vector<std::string> probes;
  if (!o.probes.empty()) probes = read_lines(fs::path(o.probes));
  std::erase_if(probes, [](const std::string& s) { return s.empty(); });

  json levels = json::array();
  auto record = [&](std::uint32_t level) {
    json row = {{"fold", level}, {"B", index.buckets()}, {"grid_bytes", index.grid_bytes()}};
    if (!probes.empty()) row["probe_fp"] = probe_fp(index, probes);
    levels.push_back(row);
  };
  record(0);
  for (std::uint32_t i = 0; i < o.times; ++i) {
    index = index.fold();
    record(i + 1);
  }
  storage::save_index(index, o.out);

  const json report = {{"input", g.index},
                       {"output", o.out},
                       {"file_bytes_before", fs::file_size(g.index)},
                       {"file_bytes_after", fs::file_size(o.out)},
                       {"levels", levels}};
  if (g.json) {
    out << report.dump(2) << "\n";
  } else {
    out << "size " << report["file_bytes_before"] << " -> " << report["file_bytes_after"]
        << " bytes, B " << b0 << " -> " << index.buckets() << "\n";
    for (const auto& l : levels) {
      out << "fold " << l["fold"] << ": B=" << l["B"] << " grid_bytes=" << l["grid_bytes"];
      if (l.contains("probe_fp")) out << " probe_fp=" << l["probe_fp"].get<double>();
      out << "\n";
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_stack(const GlobalOptions& g, const std::vector<std::string>& shards, std::ostream& out) {
  require_index(g);
  if (shards.empty()) throw UsageError("no shard files given");
  std::vector<fs::path> paths(shards.begin(), shards.end());
  const RamboIndex index = storage::stack_shards(paths);
  storage::save_index(index, g.index);
  const json report = {{"index", g.index},
                       {"K", index.set_count()},
                       {"B", index.buckets()},
                       {"R", index.repetitions()},
                       {"shards", index.params().shards},
                       {"local_b", index.params().local_buckets}};
  if (g.json) {
    out << report.dump(2) << "\n";
  } else {
    out << "K=" << index.set_count() << " B=" << index.buckets() << " R=" << index.repetitions()
        << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct AnalyzeOptions {
  double K = 100, B = 16, R = 2, V = 1, p = 0.01, eta = 2, delta = 0.01;
  double insertions = 1e6;
  std::uint64_t trials = 0;
};

int cmd_analyze(const GlobalOptions& g, const AnalyzeOptions& o, std::ostream& out) {
  const analysis::AnalysisInput in{o.K, o.B, o.R, o.V, o.p, o.eta, o.delta};
  in.validate();
  json report = {
      {"input",
       {{"K", o.K}, {"B", o.B}, {"R", o.R}, {"V", o.V}, {"p", o.p}, {"eta", o.eta},
        {"delta", o.delta}, {"total_insertions", o.insertions}}},
      {"fp_rate_lemma", analysis::fp_rate_lemma(o.p, o.B, o.V, o.R)},
      {"failure_bound", analysis::failure_bound(o.K, o.p, o.B, o.V, o.R)},
      {"failure_bound_raw", analysis::failure_bound_raw(o.K, o.p, o.B, o.V, o.R)},
      {"min_repetitions", analysis::min_repetitions(o.K, o.delta)},
      {"expected_query_cost", analysis::expected_query_cost(o.K, o.B, o.R, o.V, o.p, o.eta)},
  };
  const auto v_int = static_cast<std::uint32_t>(std::llround(o.V));
  if (o.V >= 1.0) {
    report["optimal_B"] = analysis::optimal_B(o.K, o.V, o.eta);
    report["gamma_series"] = analysis::gamma_series(o.B, v_int);
    report["gamma_balls_in_bins"] = analysis::gamma_balls_in_bins(o.B, v_int);
    if (o.p > 0.0 && o.p < 1.0) {
      report["expected_memory"] =
          analysis::expected_memory(o.B, v_int, o.K, o.p, o.insertions).bits;
    } else {
      report["expected_memory"] = nullptr;
    }
    if (o.trials > 0) {
      const auto mc = analysis::gamma_monte_carlo(static_cast<std::uint32_t>(o.B), v_int,
                                                  o.trials, g.seed);
      report["gamma_monte_carlo"] = {
          {"mean", mc.mean}, {"std_error", mc.std_error}, {"trials", mc.trials}};
    }
  } else {
    for (const char* key : {"optimal_B", "gamma_series", "gamma_balls_in_bins", "expected_memory"}) {
      report[key] = nullptr;
    }
  }
  out << report.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_stats(const GlobalOptions& g, std::ostream& out) {
  require_index(g);
  const RamboIndex index = storage::load_index(g.index);
  const auto& p = index.params();
  json cells = json::array();
  double fill_min = 1, fill_max = 0, fill_sum = 0, fp_sum = 0;
  std::size_t list_min = index.set_count(), list_max = 0, list_sum = 0;
  for (std::uint32_t r = 0; r < p.repetitions; ++r) {
    for (std::uint32_t b = 0; b < p.buckets; ++b) {
      const auto& f = index.cell(b, r);
      const double fill = f.fill_ratio();
      const double fp = std::pow(fill, f.eta());
      const std::size_t n = index.members(b, r).size();
      cells.push_back({{"b", b}, {"r", r}, {"fill", fill}, {"fp_estimate", fp}, {"members", n}});
      fill_min = std::min(fill_min, fill);
      fill_max = std::max(fill_max, fill);
      fill_sum += fill;
      fp_sum += fp;
      list_min = std::min(list_min, n);
      list_max = std::max(list_max, n);
      list_sum += n;
    }
  }
  const double cells_n = static_cast<double>(p.buckets) * p.repetitions;
  const json report = {
      {"K", index.set_count()},
      {"B", p.buckets},
      {"R", p.repetitions},
      {"m", p.bits_per_filter},
      {"eta", p.eta},
      {"k", p.kgram},
      {"shards", p.shards},
      {"local_b", p.local_buckets},
      {"grid_bytes", index.grid_bytes()},
      {"fill", {{"min", fill_min}, {"max", fill_max}, {"mean", fill_sum / cells_n}}},
      {"fp_estimate_mean", fp_sum / cells_n},
      {"member_list_sizes",
       {{"min", list_min}, {"max", list_max}, {"mean", static_cast<double>(list_sum) / cells_n}}},
      {"cells", cells},
  };
  out << report.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            std::istream& in) {
  CLI::App app{"rambo: repeated and merged Bloom filters for multiple set membership testing", "rambo"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Master hash seed")->capture_default_str();
  app.add_option("--index", g.index, "Index file");
  app.add_flag("--json", g.json, "Emit JSON reports");

  BuildOptions build;
  auto* build_cmd = app.add_subcommand("build", "Index a corpus directory (one set per file)");
  build_cmd->add_option("--corpus", build.corpus, "Corpus directory")->required();
  build_cmd->add_option("--kind", build.kind)->check(CLI::IsMember({"sequence", "document"}))
      ->capture_default_str();
  build_cmd->add_option("--k", build.k, "k-gram length for sequences")->capture_default_str();
  build_cmd->add_option("--B", build.buckets, "Buckets per table (default sqrt(K/eta))");
  build_cmd->add_option("--R", build.repetitions, "Repetitions")->capture_default_str();
  build_cmd->add_option("--eta", build.eta, "Hashes per filter")->capture_default_str();
  build_cmd->add_option("--p", build.p, "Target per-filter false-positive rate")->capture_default_str();
  build_cmd->add_option("--m", build.m, "Bits per filter (overrides sizing)");
  build_cmd->add_option("--sample", build.sample, "Files sampled for average cardinality")
      ->capture_default_str();
  build_cmd->add_flag("--foldable", build.foldable, "Require a power-of-two B");
  build_cmd->add_option("--shards", build.shards, "Simulated shard count")->capture_default_str();
  build_cmd->add_option("--local-b", build.local_b, "Buckets per shard");
  build_cmd->add_option("--stoplist", build.stoplist, "Stopword file for documents");

  QueryOptions query;
  auto* query_cmd = app.add_subcommand("query", "Query terms; TSV of matching set names");
  query_cmd->add_option("terms", query.queries, "Query strings (default: stdin lines)");
  query_cmd->add_option("--queries", query.queries_file, "File with one query per line ('-' = stdin)");
  query_cmd->add_flag("--sequence", query.sequence, "Treat each query as a sequence of k-grams");
  query_cmd->add_option("--mode", query.mode, "Multi-term semantics")
      ->check(CLI::IsMember({"term", "bucket"}))
      ->capture_default_str();
  query_cmd->add_flag("--probes", query.probes, "Append BFU probe and intersection work counts");

  FoldOptions fold;
  auto* fold_cmd = app.add_subcommand("fold", "Halve B by OR-ing the two grid halves");
  fold_cmd->add_option("--out", fold.out, "Output index")->required();
  fold_cmd->add_option("--times", fold.times, "Number of folds")->capture_default_str();
  fold_cmd->add_option("--probes", fold.probes, "Absent probe terms for FP measurement");

  std::vector<std::string> shard_paths;
  auto* stack_cmd = app.add_subcommand("stack", "Stack shard pieces into one index (--index)");
  stack_cmd->add_option("shards", shard_paths, "Shard files in shard order")->required();

  BenchConfig bench;
  std::string reading = "rate";
  auto* bench_cmd = app.add_subcommand("bench-fp", "Planted-query false-positive benchmark");
  bench_cmd->add_option("--K", bench.num_sets)->capture_default_str();
  bench_cmd->add_option("--terms-per-set", bench.terms_per_set)->capture_default_str();
  bench_cmd->add_option("--kmer", bench.kmer_length)->capture_default_str();
  bench_cmd->add_option("--B", bench.buckets)->capture_default_str();
  bench_cmd->add_option("--R", bench.repetitions)->capture_default_str();
  bench_cmd->add_option("--eta", bench.eta)->capture_default_str();
  bench_cmd->add_option("--p", bench.target_p)->capture_default_str();
  bench_cmd->add_option("--queries", bench.num_queries)->capture_default_str();
  bench_cmd->add_option("--term-length", bench.term_length)->capture_default_str();
  bench_cmd->add_option("--alpha", bench.multiplicity_alpha, "Multiplicity parameter")
      ->capture_default_str();
  bench_cmd->add_option("--alpha-is", reading, "Read alpha as exponential rate or mean")
      ->check(CLI::IsMember({"rate", "mean"}))
      ->capture_default_str();
  bench_cmd->add_option("--v-cap", bench.v_cap, "Cap on V (default K)");

  AnalyzeOptions analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Evaluate the closed-form cost and error model");
  analyze_cmd->add_option("--K", analyze.K)->capture_default_str();
  analyze_cmd->add_option("--B", analyze.B)->capture_default_str();
  analyze_cmd->add_option("--R", analyze.R)->capture_default_str();
  analyze_cmd->add_option("--V", analyze.V)->capture_default_str();
  analyze_cmd->add_option("--p", analyze.p)->capture_default_str();
  analyze_cmd->add_option("--eta", analyze.eta)->capture_default_str();
  analyze_cmd->add_option("--delta", analyze.delta)->capture_default_str();
  analyze_cmd->add_option("--N", analyze.insertions, "Total insertions")->capture_default_str();
  analyze_cmd->add_option("--trials", analyze.trials, "Monte-Carlo trials for gamma (0 = skip)");

  auto* stats_cmd = app.add_subcommand("stats", "Fill ratios and member-list balance of an index");

  try {
    std::vector<std::string> argv(args.rbegin(), args.rend());
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*build_cmd) return cmd_build(g, build, out, err);
    if (*query_cmd) return cmd_query(g, query, out, err, in);
    if (*fold_cmd) return cmd_fold(g, fold, out);
    if (*stack_cmd) return cmd_stack(g, shard_paths, out);
    if (*bench_cmd) {
      bench.seed = g.seed;
      bench.alpha_reading = reading == "mean" ? AlphaReading::kMean : AlphaReading::kRate;
      out << to_json(run_bench_fp(bench)).dump(2) << "\n";
      return kExitOk;
    }
    if (*analyze_cmd) return cmd_analyze(g, analyze, out);
    if (*stats_cmd) return cmd_stats(g, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitUsage;
}

}  // namespace rambo::tools
