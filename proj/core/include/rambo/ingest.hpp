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
#include <filesystem>
#include <functional>
#include <iterator>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace rambo::ingest {

using TermSink = std::function<void(std::string_view)>;
using Stoplist = std::unordered_set<std::string>;

/// Stride-1 windows of length k over a byte string, as views into it.
class KgramRange {
 public:
  class iterator {
   public:
    using iterator_category = std::forward_iterator_tag;
    using value_type = std::string_view;
    using difference_type = std::ptrdiff_t;
    using pointer = const std::string_view*;
    using reference = std::string_view;

    iterator() = default;
    iterator(std::string_view seq, std::size_t k, std::size_t pos) : seq_(seq), k_(k), pos_(pos) {}

    std::string_view operator*() const { return seq_.substr(pos_, k_); }
    iterator& operator++() {
      ++pos_;
      return *this;
    }
    iterator operator++(int) {
      iterator old = *this;
      ++pos_;
      return old;
    }
    friend bool operator==(const iterator& a, const iterator& b) { return a.pos_ == b.pos_; }

   private:
    std::string_view seq_;
    std::size_t k_ = 0;
    std::size_t pos_ = 0;
  };

  KgramRange(std::string_view seq, std::size_t k) : seq_(seq), k_(k) {}

  std::size_t size() const noexcept { return seq_.size() >= k_ ? seq_.size() - k_ + 1 : 0; }
  bool empty() const noexcept { return size() == 0; }
  iterator begin() const { return {seq_, k_, 0}; }
  iterator end() const { return {seq_, k_, size()}; }

 private:
  std::string_view seq_;
  std::size_t k_;
};

/// Throws kInvalidParameter for k == 0. Empty when seq is shorter than k.
KgramRange kgram_tokens(std::string_view seq, std::uint32_t k);

/// Incremental k-gram windows over a byte stream with '\n' and '\r' removed.
class KgramStreamer {
 public:
  explicit KgramStreamer(std::uint32_t k);
  void feed(std::string_view chunk, const TermSink& sink);
  /// Sequence bytes seen so far (line breaks excluded).
  std::uint64_t length() const noexcept { return length_; }

 private:
  std::uint32_t k_;
  std::string window_;
  std::uint64_t length_ = 0;
};

/// Lowercased maximal [a-z0-9] runs, minus stopwords. Chunks may split a token.
class WordTokenizer {
 public:
  explicit WordTokenizer(const Stoplist* stoplist = nullptr) : stoplist_(stoplist) {}
  void feed(std::string_view chunk, const TermSink& sink);
  void finish(const TermSink& sink);

 private:
  void emit(const TermSink& sink);

  const Stoplist* stoplist_;
  std::string token_;
};

std::vector<std::string> word_tokens(std::string_view text, const Stoplist& stoplist = {});

/// Newline-separated words, lowercased; blank lines ignored.
Stoplist load_stoplist(const std::filesystem::path& path);

enum class CorpusKind { kSequence, kDocument };

struct CorpusSpec {
  std::filesystem::path root;
  CorpusKind kind = CorpusKind::kSequence;
  std::uint32_t k = 31;
  std::optional<std::filesystem::path> stoplist;
};

struct CorpusIssue {
  std::filesystem::path path;
  std::string message;
};

/**
 * One set per regular file directly under root (dot-files skipped), named by
 * file name and visited in lexicographic order. Terms are streamed from disk
 * in fixed-size chunks.
 */
class CorpusReader {
 public:
  /// Throws kIo when root is missing or not a directory.
  explicit CorpusReader(CorpusSpec spec);

  std::size_t size() const noexcept { return files_.size(); }
  const std::filesystem::path& path(std::size_t i) const { return files_.at(i); }
  std::string set_name(std::size_t i) const { return files_.at(i).filename().string(); }

  /// Streams file i's terms. An unreadable file is recorded in errors() and
  /// yields false; a sequence shorter than k is recorded in warnings().
  bool for_each_term(std::size_t i, const TermSink& sink);

  /// for_each_term over every file in order.
  void for_each_set(const std::function<void(const std::string& name, std::size_t file)>& visit);

  const std::vector<CorpusIssue>& errors() const noexcept { return errors_; }
  const std::vector<CorpusIssue>& warnings() const noexcept { return warnings_; }
  const CorpusSpec& spec() const noexcept { return spec_; }

 private:
  CorpusSpec spec_;
  Stoplist stoplist_;
  std::vector<std::filesystem::path> files_;
  std::vector<CorpusIssue> errors_;
  std::vector<CorpusIssue> warnings_;
};

/// Mean distinct-term count over the first sample_files files (fewer if the
/// corpus is smaller). Throws kInvalidParameter on an empty corpus.
double sample_avg_cardinality(const CorpusSpec& spec, std::size_t sample_files);

}  // namespace rambo::ingest
