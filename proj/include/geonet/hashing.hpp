#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "geonet/archive.hpp"
#include "geonet/corpus.hpp"
#include "geonet/model.hpp"
#include "geonet/rng.hpp"

namespace geonet {

/// Fixed-width bit vector packed into 64-bit words; bit i lives in
/// words[i / 64] at position i % 64. Unused high bits are always zero.
struct BinaryCode {
  std::size_t width = 0;
  std::vector<std::uint64_t> words;
  std::int64_t id = 0;
  std::int32_t label = -1;

  BinaryCode() = default;
  explicit BinaryCode(std::size_t w) : width(w), words((w + 63) / 64, 0) {}

  bool bit(std::size_t i) const { return (words[i / 64] >> (i % 64)) & 1u; }
  void set(std::size_t i, bool on) {
    const std::uint64_t mask = std::uint64_t{1} << (i % 64);
    words[i / 64] = on ? (words[i / 64] | mask) : (words[i / 64] & ~mask);
  }
  std::string to_string() const {
    std::string s(width, '0');
    for (std::size_t i = 0; i < width; ++i) s[i] = bit(i) ? '1' : '0';
    return s;
  }
  friend bool operator==(const BinaryCode&, const BinaryCode&) = default;
};

/// bit_i = 1 iff r_i > 0; zero maps to 0.
inline BinaryCode binarize_sign(std::span<const double> r, std::int64_t id = 0, std::int32_t label = -1) {
  BinaryCode code(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) code.set(i, r[i] > 0.0);
  code.id = id;
  code.label = label;
  return code;
}

inline std::size_t hamming(const BinaryCode& a, const BinaryCode& b) {
  if (a.width != b.width) {
    throw std::invalid_argument("hamming: width mismatch (" + std::to_string(a.width) + " vs " +
                                std::to_string(b.width) + ")");
  }
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.words.size(); ++i) d += std::popcount(a.words[i] ^ b.words[i]);
  return d;
}

/// Index ids sorted by ascending Hamming distance, ties by ascending id.
inline std::vector<std::int64_t> retrieve(const BinaryCode& query, std::span<const BinaryCode> index) {
  if (index.empty()) throw std::invalid_argument("retrieve: empty index");
  std::vector<std::pair<std::size_t, std::int64_t>> keyed;
  keyed.reserve(index.size());
  for (const auto& c : index) keyed.emplace_back(hamming(query, c), c.id);
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::int64_t> ranking;
  ranking.reserve(keyed.size());
  for (const auto& [d, id] : keyed) ranking.push_back(id);
  return ranking;
}

/// Mean of precision@rank over the relevant items, over the full ranking.
inline double average_precision(std::span<const std::int64_t> ranking,
                                const std::unordered_set<std::int64_t>& relevant) {
  if (relevant.empty()) throw std::invalid_argument("average_precision: empty relevant set");
  std::size_t hits = 0;
  double total = 0.0;
  for (std::size_t k = 0; k < ranking.size(); ++k) {
    if (relevant.count(ranking[k])) {
      ++hits;
      total += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  if (hits != relevant.size()) {
    throw std::invalid_argument("average_precision: relevant ids missing from the ranking");
  }
  return total / static_cast<double>(relevant.size());
}

struct MapReport {
  double map = 0.0;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;  // queries without a same-label index item
  std::vector<double> per_query;  // AP per evaluated query, in query order
};

/// Relevant items for a query are the index codes with the same label.
inline MapReport map_eval(std::span<const BinaryCode> queries, std::span<const BinaryCode> index) {
  std::map<std::int32_t, std::unordered_set<std::int64_t>> by_label;
  for (const auto& c : index) by_label[c.label].insert(c.id);
  MapReport rep;
  double total = 0.0;
  for (const auto& q : queries) {
    const auto it = by_label.find(q.label);
    if (it == by_label.end()) {
      ++rep.excluded;
      continue;
    }
    const double ap = average_precision(retrieve(q, index), it->second);
    rep.per_query.push_back(ap);
    total += ap;
  }
  rep.evaluated = rep.per_query.size();
  rep.map = rep.evaluated ? total / static_cast<double>(rep.evaluated) : 0.0;
  return rep;
}

/// Sign codes of the penultimate layer; ids are positions in `examples`.
inline std::vector<BinaryCode> model_codes(const GeoModel& model, std::span<const EncodedExample> examples) {
  const auto reps = penultimate_vectors(model, examples);
  std::vector<BinaryCode> codes;
  codes.reserve(reps.size());
  for (std::size_t i = 0; i < reps.size(); ++i) {
    codes.push_back(binarize_sign(reps[i], static_cast<std::int64_t>(i), examples[i].label_id));
  }
  return codes;
}

inline MapReport map_eval(const GeoModel& model, std::span<const EncodedExample> dev,
                          std::span<const EncodedExample> test) {
  const auto index = model_codes(model, dev);
  const auto queries = model_codes(model, test);
  return map_eval(queries, index);
}

inline void write_map_report(std::ostream& out, const MapReport& rep, std::size_t width,
                             std::uint64_t seed) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", rep.map);
  out << "#geonet-map v1 seed=" << seed << '\n';
  out << "width\tmap\tevaluated\texcluded\n";
  out << width << '\t' << buf << '\t' << rep.evaluated << '\t' << rep.excluded << '\n';
}

// ---------------------------------------------------------------------------
// Random-hyperplane LSH

class LshModel {
 public:
  LshModel(std::size_t bits, std::size_t dim, Rng& rng) : bits_(bits), dim_(dim), planes_(bits * dim) {
    if (bits == 0 || dim == 0) throw std::invalid_argument("lsh: bits and dimension must be positive");
    for (double& p : planes_) p = rng.normal();
  }

  std::size_t bits() const { return bits_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> hyperplane(std::size_t i) const { return {planes_.data() + i * dim_, dim_}; }

 private:
  std::size_t bits_, dim_;
  std::vector<double> planes_;  // [bits, dim]
};

inline BinaryCode lsh_encode(std::span<const double> x, const LshModel& lsh, std::int64_t id = 0,
                             std::int32_t label = -1) {
  if (x.size() != lsh.dim()) {
    throw std::invalid_argument("lsh_encode: input has " + std::to_string(x.size()) +
                                " dims, model expects " + std::to_string(lsh.dim()));
  }
  BinaryCode code(lsh.bits());
  for (std::size_t i = 0; i < lsh.bits(); ++i) {
    const auto plane = lsh.hyperplane(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) dot += plane[j] * x[j];
    code.set(i, dot > 0.0);
  }
  code.id = id;
  code.label = label;
  return code;
}

/// Raw concatenated inputs for the LSH baseline: L2-normalised character
/// count vectors of text and location, the three normalised scalars, and a
/// one-hot timezone.
inline std::vector<double> raw_input_features(const EncodedExample& e, std::size_t char_vocab,
                                              std::size_t timezones) {
  std::vector<double> out(2 * char_vocab + 3 + timezones, 0.0);
  auto histogram = [&](const std::vector<std::int32_t>& ids, std::size_t offset) {
    double norm = 0.0;
    for (std::int32_t id : ids) {
      if (id == kPadId) continue;
      out[offset + static_cast<std::size_t>(id)] += 1.0;
    }
    for (std::size_t i = 0; i < char_vocab; ++i) norm += out[offset + i] * out[offset + i];
    if (norm > 0.0) {
      norm = std::sqrt(norm);
      for (std::size_t i = 0; i < char_vocab; ++i) out[offset + i] /= norm;
    }
  };
  histogram(e.text_ids, 0);
  histogram(e.location_ids, char_vocab);
  // Centre the scalars so that the hyperplanes through the origin split them.
  out[2 * char_vocab] = e.tweet_time - 0.5;
  out[2 * char_vocab + 1] = e.utc_offset - 0.5;
  out[2 * char_vocab + 2] = e.account_time - 0.5;
  if (e.timezone_id >= 0 && static_cast<std::size_t>(e.timezone_id) < timezones) {
    out[2 * char_vocab + 3 + static_cast<std::size_t>(e.timezone_id)] = 1.0;
  }
  return out;
}

inline std::vector<BinaryCode> lsh_codes(const LshModel& lsh, std::span<const EncodedExample> examples,
                                         std::size_t char_vocab, std::size_t timezones) {
  std::vector<BinaryCode> codes;
  codes.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    codes.push_back(lsh_encode(raw_input_features(examples[i], char_vocab, timezones), lsh,
                               static_cast<std::int64_t>(i), examples[i].label_id));
  }
  return codes;
}

// ---------------------------------------------------------------------------
// Histogram of penultimate values

struct RHistogram {
  std::vector<double> edges;   // bins + 1 edges over [-1, 1]
  std::vector<std::size_t> counts;
  std::size_t total = 0;
  double low_mass = 0.0;     // fraction in [-1, -0.9]
  double middle_mass = 0.0;  // fraction in (-0.9, 0.9)
  double high_mass = 0.0;    // fraction in [0.9, 1]

  double extreme_mass() const { return low_mass + high_mass; }
};

inline RHistogram r_histogram(std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("r_histogram: bins must be positive");
  RHistogram h;
  h.counts.assign(bins, 0);
  for (std::size_t i = 0; i <= bins; ++i) h.edges.push_back(-1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(bins));
  std::size_t low = 0, high = 0;
  for (double v : values) {
    const double c = std::clamp(v, -1.0, 1.0);
    auto b = static_cast<std::size_t>((c + 1.0) / 2.0 * static_cast<double>(bins));
    h.counts[std::min(b, bins - 1)]++;
    low += c <= -0.9 ? 1 : 0;
    high += c >= 0.9 ? 1 : 0;
  }
  h.total = values.size();
  if (h.total) {
    const double n = static_cast<double>(h.total);
    h.low_mass = static_cast<double>(low) / n;
    h.high_mass = static_cast<double>(high) / n;
    h.middle_mass = static_cast<double>(h.total - low - high) / n;
  }
  return h;
}

inline RHistogram r_histogram(const GeoModel& model, std::span<const EncodedExample> examples,
                              std::size_t bins) {
  std::vector<double> pooled;
  for (const auto& row : penultimate_vectors(model, examples)) pooled.insert(pooled.end(), row.begin(), row.end());
  return r_histogram(pooled, bins);
}

inline void write_histogram(std::ostream& out, const RHistogram& h, std::uint64_t seed) {
  char buf[128];
  out << "#geonet-r-histogram v1 seed=" << seed << '\n';
  std::snprintf(buf, sizeof buf, "#extreme_low=%.6f middle=%.6f extreme_high=%.6f total=%zu\n",
                h.low_mass, h.middle_mass, h.high_mass, h.total);
  out << buf << "bin_lo\tbin_hi\tcount\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f\t%.6f\t%zu\n", h.edges[i], h.edges[i + 1], h.counts[i]);
    out << buf;
  }
}

// ---------------------------------------------------------------------------
// Code files

inline constexpr char kCodeMagic[8] = {'G', 'E', 'O', 'C', 'O', 'D', 'E', 'S'};
inline constexpr std::uint32_t kCodeFormatVersion = 1;

struct CodeFile {
  std::size_t width = 0;
  std::uint64_t seed = 0;
  std::vector<BinaryCode> codes;
};

/// Packed bits per record: byte 0's most significant bit holds bit 0.
inline std::vector<unsigned char> encode_codes(const CodeFile& file) {
  std::vector<unsigned char> out;
  detail::LeWriter w(out);
  w.bytes(kCodeMagic, sizeof kCodeMagic);
  w.u32(kCodeFormatVersion);
  w.u32(static_cast<std::uint32_t>(file.width));
  w.u64(file.codes.size());
  w.u64(file.seed);
  const std::size_t nbytes = (file.width + 7) / 8;
  for (const auto& c : file.codes) {
    if (c.width != file.width) throw std::invalid_argument("code file: mixed code widths");
    w.i64(c.id);
    w.i32(c.label);
    std::vector<std::uint8_t> packed(nbytes, 0);
    for (std::size_t i = 0; i < c.width; ++i) {
      if (c.bit(i)) packed[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
    }
    w.bytes(packed.data(), packed.size());
  }
  return out;
}

inline CodeFile decode_codes(const std::vector<unsigned char>& data,
                             const std::string& source = "code file") {
  detail::LeReader r(data, source);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (!std::equal(magic, magic + 8, kCodeMagic)) throw ArchiveError(source + ": not a code file");
  const std::uint32_t version = r.u32();
  if (version != kCodeFormatVersion) {
    throw ArchiveError(source + ": unsupported code file version " + std::to_string(version));
  }
  CodeFile file;
  file.width = r.u32();
  const std::uint64_t count = r.u64();
  file.seed = r.u64();
  const std::size_t nbytes = (file.width + 7) / 8;
  for (std::uint64_t k = 0; k < count; ++k) {
    BinaryCode c(file.width);
    c.id = r.i64();
    c.label = r.i32();
    std::vector<std::uint8_t> packed(nbytes);
    r.bytes(packed.data(), nbytes);
    for (std::size_t i = 0; i < file.width; ++i) c.set(i, packed[i / 8] & (0x80u >> (i % 8)));
    file.codes.push_back(std::move(c));
  }
  if (!r.done()) throw ArchiveError(source + ": trailing bytes");
  return file;
}

inline void save_codes(const std::string& path, const CodeFile& file) {
  detail::write_file_bytes(path, encode_codes(file));
}

inline CodeFile load_codes(const std::string& path) {
  return decode_codes(detail::read_file_bytes(path), path);
}

}  // namespace geonet
