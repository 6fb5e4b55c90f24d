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

#include "rambo/storage.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <system_error>

#include "rambo/error.hpp"

namespace rambo::storage {
namespace {

constexpr char kMagic[4] = {'R', 'M', 'B', 'O'};

[[noreturn]] void corrupt(const std::string& what) { throw Error(ErrorCode::kCorruptIndex, what); }

class Writer {
 public:
  template <typename T>
  void put(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
    }
  }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  std::span<std::uint8_t> grow(std::size_t n) {
    out_.resize(out_.size() + n);
    return {out_.data() + out_.size() - n, n};
  }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  template <typename T>
  T get() {
    auto b = take(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return static_cast<T>(v);
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > in_.size() - pos_) corrupt("truncated index file");
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

template <typename To, typename From>
To narrow(From v, const char* field) {
  if (v > std::numeric_limits<To>::max()) {
    throw Error(ErrorCode::kInvalidParameter, std::string(field) + " does not fit the file format");
  }
  return static_cast<To>(v);
}

IndexFileHeader parse_header(Reader& r) {
  auto magic = r.take(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) corrupt("bad magic");
  IndexFileHeader h;
  h.version = r.get<std::uint16_t>();
  if (h.version != kFormatVersion) corrupt("unsupported version " + std::to_string(h.version));
  h.buckets = r.get<std::uint32_t>();
  h.repetitions = r.get<std::uint16_t>();
  h.eta = r.get<std::uint16_t>();
  h.bits_per_filter = r.get<std::uint64_t>();
  h.kgram = r.get<std::uint16_t>();
  h.master_seed = r.get<std::uint64_t>();
  h.shards = r.get<std::uint16_t>();
  h.local_buckets = r.get<std::uint32_t>();
  h.set_count = r.get<std::uint32_t>();
  return h;
}

}  // namespace

RamboParams IndexFileHeader::params() const {
  RamboParams p;
  p.buckets = buckets;
  p.repetitions = repetitions;
  p.eta = eta;
  p.bits_per_filter = bits_per_filter;
  p.kgram = kgram;
  p.master_seed = master_seed;
  p.shards = shards;
  p.local_buckets = local_buckets;
  return p;
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in pieces.
  constexpr std::size_t kStep = std::size_t{1} << 30;
  for (std::size_t off = 0; off < bytes.size(); off += kStep) {
    const std::size_t n = std::min(kStep, bytes.size() - off);
    crc = ::crc32(crc, bytes.data() + off, static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> serialize(const RamboIndex& index) {
  const RamboParams& p = index.params();
  const std::uint32_t B = p.buckets;
  const std::uint32_t R = p.repetitions;

  Writer w;
  w.bytes(kMagic, 4);
  w.put<std::uint16_t>(kFormatVersion);
  w.put<std::uint32_t>(B);
  w.put<std::uint16_t>(narrow<std::uint16_t>(R, "R"));
  w.put<std::uint16_t>(narrow<std::uint16_t>(p.eta, "eta"));
  w.put<std::uint64_t>(p.bits_per_filter);
  w.put<std::uint16_t>(narrow<std::uint16_t>(p.kgram, "k"));
  w.put<std::uint64_t>(p.master_seed);
  w.put<std::uint16_t>(narrow<std::uint16_t>(p.shards, "shards"));
  w.put<std::uint32_t>(p.local_buckets);
  w.put<std::uint32_t>(narrow<std::uint32_t>(index.set_count(), "K"));

  for (const auto& name : index.registry().names()) {
    w.put<std::uint32_t>(narrow<std::uint32_t>(name.size(), "set name length"));
    w.bytes(name.data(), name.size());
  }
  for (std::uint32_t r = 0; r < R; ++r) {
    for (std::uint32_t b = 0; b < B; ++b) {
      const auto ids = index.members(b, r);
      w.put<std::uint32_t>(static_cast<std::uint32_t>(ids.size()));
      for (SetId id : ids) w.put<std::uint32_t>(id);
    }
  }
  for (std::uint32_t r = 0; r < R; ++r) {
    for (std::uint32_t b = 0; b < B; ++b) {
      const auto& f = index.cell(b, r);
      f.write_bytes(w.grow(f.byte_size()));
    }
  }
  const std::uint32_t crc = crc32(w.buffer());
  w.put<std::uint32_t>(crc);
  return std::move(w.buffer());
}

RamboIndex deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes + 4) corrupt("truncated index file");
  Reader head(bytes);
  const IndexFileHeader h = parse_header(head);

  const auto body = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  if (crc32(body) != tail.get<std::uint32_t>()) corrupt("CRC mismatch");

  RamboParams params = h.params();
  try {
    params.validate();
  } catch (const Error& e) {
    corrupt(std::string("header: ") + e.what());
  }
  if (params.bits_per_filter == 0 || params.bits_per_filter > (std::uint64_t{1} << 56)) {
    corrupt("header: implausible m");
  }

  Reader r(body);
  r.take(kHeaderBytes);

  SetRegistry registry;
  for (std::uint32_t i = 0; i < h.set_count; ++i) {
    const auto len = r.get<std::uint32_t>();
    auto name = r.take(len);
    const std::string s(reinterpret_cast<const char*>(name.data()), name.size());
    if (registry.add(s) != i) {
      throw Error(ErrorCode::kInconsistentIndex, "duplicate set name '" + s + "'");
    }
  }

  const std::size_t cells = std::size_t{params.buckets} * params.repetitions;
  if (cells > r.remaining() / 4) corrupt("truncated index file");
  std::vector<std::vector<SetId>> members(cells);
  for (auto& list : members) {
    const auto count = r.get<std::uint32_t>();
    if (count > h.set_count) corrupt("member list longer than K");
    if (std::size_t{count} * 4 > r.remaining()) corrupt("truncated index file");
    list.resize(count);
    for (auto& id : list) id = r.get<std::uint32_t>();
  }

  const std::uint64_t filter_bytes = (params.bits_per_filter + 7) / 8;
  if (filter_bytes > r.remaining() / cells || cells * filter_bytes != r.remaining()) {
    corrupt("filter section size mismatch");
  }
  const auto proto = BloomFilterUnit::seeded(params.bits_per_filter, params.eta, params.master_seed);
  std::vector<BloomFilterUnit> filters(cells, proto);
  for (auto& f : filters) f.read_bytes(r.take(f.byte_size()));

  return RamboIndex(params, std::move(registry), std::move(members), std::move(filters));
}

IndexFileHeader read_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> buf(kHeaderBytes);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size()) corrupt("truncated index file");
  Reader r(buf);
  return parse_header(r);
}

void save_index(const RamboIndex& index, const std::filesystem::path& path) {
  const auto bytes = serialize(index);
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (out) {
      out.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
      out.flush();
    }
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorCode::kIo, "cannot write " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIo, "cannot move index into place at " + path.string());
  }
}

RamboIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot stat " + path.string());
  std::vector<std::uint8_t> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (static_cast<std::uintmax_t>(in.gcount()) != size) {
    throw Error(ErrorCode::kIo, "read error on " + path.string());
  }
  return deserialize(bytes);
}

RamboIndex stack_shards(std::span<const std::filesystem::path> paths) {
  std::vector<RamboIndex> pieces;
  pieces.reserve(paths.size());
  for (const auto& p : paths) pieces.push_back(load_index(p));
  return rambo::stack_shards(pieces);
}

}  // namespace rambo::storage
