#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "geonet/params.hpp"
#include "geonet/tensor.hpp"

namespace geonet {

// Parameter archive layout (all integers little-endian):
//
//   "GEONETPA"                      8-byte magic
//   u32 version                     kArchiveVersion
//   u32 metadata count, then per entry: string key, string value
//   u32 tensor count, then per tensor:
//     string name, u32 rank, u64 dims[rank], f64 values[prod(dims)]
//
// where a string is a u32 byte length followed by UTF-8 bytes and f64 is the
// IEEE-754 bit pattern, row-major.

inline constexpr std::array<char, 8> kArchiveMagic = {'G', 'E', 'O', 'N',
                                                      'E', 'T', 'P', 'A'};
inline constexpr std::uint32_t kArchiveVersion = 1;

class ArchiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

struct Archive {
  std::map<std::string, std::string> metadata;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const {
    for (const auto& t : tensors) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }

  const std::string& meta(const std::string& key) const {
    auto it = metadata.find(key);
    if (it == metadata.end()) throw ArchiveError("archive lacks metadata key '" + key + "'");
    return it->second;
  }
};

namespace detail {

class LeWriter {
 public:
  explicit LeWriter(std::vector<unsigned char>& out) : out_(out) {}

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    out_.insert(out_.end(), c, c + n);
  }

 private:
  std::vector<unsigned char>& out_;
};

class LeReader {
 public:
  LeReader(const std::vector<unsigned char>& in, std::string what)
      : in_(in), what_(std::move(what)) {}

  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw ArchiveError(what_ + ": truncated data");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  void bytes(void* p, std::size_t n) {
    need(n);
    std::copy_n(in_.begin() + static_cast<std::ptrdiff_t>(pos_), n, static_cast<unsigned char*>(p));
    pos_ += n;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::vector<unsigned char>& in_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::vector<unsigned char> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArchiveError("cannot open " + path);
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

inline void write_file_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArchiveError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ArchiveError("write failed for " + path);
}

}  // namespace detail

inline std::vector<unsigned char> encode_archive(const Archive& archive) {
  std::vector<unsigned char> out;
  detail::LeWriter w(out);
  w.bytes(kArchiveMagic.data(), kArchiveMagic.size());
  w.u32(kArchiveVersion);
  w.u32(static_cast<std::uint32_t>(archive.metadata.size()));
  for (const auto& [k, v] : archive.metadata) {
    w.str(k);
    w.str(v);
  }
  w.u32(static_cast<std::uint32_t>(archive.tensors.size()));
  for (const auto& t : archive.tensors) {
    if (shape_size(t.shape) != t.values.size()) {
      throw ArchiveError("tensor " + t.name + " has inconsistent shape");
    }
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) w.u64(d);
    for (double v : t.values) w.f64(v);
  }
  return out;
}

inline Archive decode_archive(const std::vector<unsigned char>& bytes,
                              const std::string& what = "archive") {
  detail::LeReader r(bytes, what);
  std::array<char, 8> magic{};
  r.bytes(magic.data(), magic.size());
  if (magic != kArchiveMagic) throw ArchiveError(what + ": not a parameter archive");
  const std::uint32_t version = r.u32();
  if (version != kArchiveVersion) {
    throw ArchiveError(what + ": unsupported archive version " + std::to_string(version));
  }
  Archive a;
  const std::uint32_t n_meta = r.u32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.str();
    a.metadata[std::move(k)] = r.str();
  }
  const std::uint32_t n_tensors = r.u32();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    NamedTensor t;
    t.name = r.str();
    const std::uint32_t rank = r.u32();
    for (std::uint32_t d = 0; d < rank; ++d) t.shape.push_back(static_cast<std::size_t>(r.u64()));
    const std::size_t n = shape_size(t.shape);
    r.need(n * 8);
    t.values.resize(n);
    for (double& v : t.values) v = r.f64();
    a.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw ArchiveError(what + ": trailing bytes");
  return a;
}

inline void save_archive(const std::string& path, const Archive& archive) {
  detail::write_file_bytes(path, encode_archive(archive));
}

inline Archive load_archive(const std::string& path) {
  return decode_archive(detail::read_file_bytes(path), path);
}

inline void store_params(Archive& archive, const ParamSet& params) {
  for (const auto& e : params.entries()) {
    archive.tensors.push_back(
        {e.name, e.tensor.shape(), {e.tensor.values().begin(), e.tensor.values().end()}});
  }
}

/// Copies archived values into `params`; every parameter must be present with
/// an identical shape.
inline void load_params(const Archive& archive, ParamSet& params) {
  for (auto& e : params.entries()) {
    const NamedTensor* t = archive.find(e.name);
    if (!t) throw ArchiveError("archive lacks parameter " + e.name);
    if (t->shape != e.tensor.shape()) {
      throw ArchiveError("parameter " + e.name + " has shape " + shape_string(t->shape) +
                         " in archive but model expects " + shape_string(e.tensor.shape()));
    }
    std::copy(t->values.begin(), t->values.end(), e.tensor.values().begin());
  }
}

}  // namespace geonet
