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

#include "rambo/ingest.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <system_error>

#include "rambo/error.hpp"

namespace rambo::ingest {
namespace {

constexpr std::size_t kChunkBytes = 1 << 16;

char lower_alnum(char c) {
  if (c >= 'A' && c <= 'Z') return static_cast<char>(c - 'A' + 'a');
  if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) return c;
  return 0;
}

}  // namespace

KgramRange kgram_tokens(std::string_view seq, std::uint32_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidParameter, "k must be >= 1");
  return KgramRange(seq, k);
}

KgramStreamer::KgramStreamer(std::uint32_t k) : k_(k) {
  if (k == 0) throw Error(ErrorCode::kInvalidParameter, "k must be >= 1");
}

void KgramStreamer::feed(std::string_view chunk, const TermSink& sink) {
  for (char c : chunk) {
    if (c == '\n' || c == '\r') continue;
    window_.push_back(c);
    ++length_;
  }
  if (window_.size() < k_) return;
  const std::size_t windows = window_.size() - k_ + 1;
  const std::string_view view(window_);
  for (std::size_t i = 0; i < windows; ++i) sink(view.substr(i, k_));
  window_.erase(0, windows);  // keep the last k-1 bytes
}

void WordTokenizer::emit(const TermSink& sink) {
  if (token_.empty()) return;
  if (stoplist_ == nullptr || !stoplist_->contains(token_)) sink(token_);
  token_.clear();
}

void WordTokenizer::feed(std::string_view chunk, const TermSink& sink) {
  for (char c : chunk) {
    if (char l = lower_alnum(c)) {
      token_.push_back(l);
    } else {
      emit(sink);
    }
  }
}

void WordTokenizer::finish(const TermSink& sink) { emit(sink); }

std::vector<std::string> word_tokens(std::string_view text, const Stoplist& stoplist) {
  std::vector<std::string> out;
  WordTokenizer tok(&stoplist);
  const TermSink sink = [&](std::string_view t) { out.emplace_back(t); };
  tok.feed(text, sink);
  tok.finish(sink);
  return out;
}

Stoplist load_stoplist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read stoplist " + path.string());
  Stoplist words;
  std::string line;
  while (std::getline(in, line)) {
    std::string w;
    for (char c : line) {
      if (c == '\r' || c == ' ' || c == '\t') continue;
      w.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
    }
    if (!w.empty()) words.insert(std::move(w));
  }
  return words;
}

// ---------------------------------------------------------------------------

CorpusReader::CorpusReader(CorpusSpec spec) : spec_(std::move(spec)) {
  std::error_code ec;
  if (!std::filesystem::is_directory(spec_.root, ec)) {
    throw Error(ErrorCode::kIo, "corpus root is not a directory: " + spec_.root.string());
  }
  if (spec_.kind == CorpusKind::kSequence && spec_.k == 0) {
    throw Error(ErrorCode::kInvalidParameter, "sequence corpora need k >= 1");
  }
  if (spec_.stoplist) stoplist_ = load_stoplist(*spec_.stoplist);

  for (const auto& entry : std::filesystem::directory_iterator(spec_.root)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename().string().starts_with('.')) continue;
    files_.push_back(entry.path());
  }
  std::sort(files_.begin(), files_.end(), [](const auto& a, const auto& b) {
    return a.filename().string() < b.filename().string();
  });
}

bool CorpusReader::for_each_term(std::size_t i, const TermSink& sink) {
  const auto& file = files_.at(i);
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    errors_.push_back({file, "cannot open for reading"});
    return false;
  }
  std::array<char, kChunkBytes> buf;
  auto read_all = [&](auto&& consume) {
    while (in) {
      in.read(buf.data(), buf.size());
      const auto got = static_cast<std::size_t>(in.gcount());
      if (got > 0) consume(std::string_view(buf.data(), got));
    }
    return !in.bad();
  };

  bool ok = true;
  if (spec_.kind == CorpusKind::kSequence) {
    KgramStreamer grams(spec_.k);
    ok = read_all([&](std::string_view chunk) { grams.feed(chunk, sink); });
    if (ok && grams.length() < spec_.k) {
      warnings_.push_back({file, "sequence shorter than k; no terms"});
    }
  } else {
    WordTokenizer words(spec_.stoplist ? &stoplist_ : nullptr);
    ok = read_all([&](std::string_view chunk) { words.feed(chunk, sink); });
    words.finish(sink);
  }
  if (!ok) errors_.push_back({file, "read error"});
  return ok;
}

void CorpusReader::for_each_set(
    const std::function<void(const std::string& name, std::size_t file)>& visit) {
  for (std::size_t i = 0; i < files_.size(); ++i) visit(set_name(i), i);
}

double sample_avg_cardinality(const CorpusSpec& spec, std::size_t sample_files) {
  if (sample_files < 1) throw Error(ErrorCode::kInvalidParameter, "sample_files must be >= 1");
  CorpusReader reader(spec);
  if (reader.size() == 0) throw Error(ErrorCode::kInvalidParameter, "empty corpus");
  const std::size_t n = std::min(sample_files, reader.size());
  double total = 0.0;
  std::size_t counted = 0;
  std::unordered_set<std::string> distinct;
  for (std::size_t i = 0; i < n; ++i) {
    distinct.clear();
    if (!reader.for_each_term(i, [&](std::string_view t) { distinct.emplace(t); })) continue;
    total += static_cast<double>(distinct.size());
    ++counted;
  }
  if (counted == 0) throw Error(ErrorCode::kIo, "no readable files in the sample");
  return total / static_cast<double>(counted);
}

}  // namespace rambo::ingest
