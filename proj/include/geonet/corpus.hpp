#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace geonet {

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// UTF-8

/// Decodes UTF-8 into Unicode scalar values. Malformed sequences decode to
/// U+FFFD one byte at a time.
inline std::u32string utf8_decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      len = 1;
      cp = c;
    } else if ((c >> 5) == 0x6) {
      len = 2;
      cp = c & 0x1f;
    } else if ((c >> 4) == 0xe) {
      len = 3;
      cp = c & 0x0f;
    } else if ((c >> 3) == 0x1e) {
      len = 4;
      cp = c & 0x07;
    }
    bool ok = len > 0 && i + len <= s.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc >> 6) != 0x2) ok = false;
      cp = (cp << 6) | (cc & 0x3f);
    }
    static constexpr char32_t kMinForLength[] = {0, 0, 0x80, 0x800, 0x10000};
    if (ok && (cp < kMinForLength[len] || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff))) {
      ok = false;
    }
    if (ok) {
      out.push_back(cp);
      i += len;
    } else {
      out.push_back(U'\uFFFD');
      ++i;
    }
  }
  return out;
}

inline std::string utf8_encode(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
      out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Timestamps

/// Seconds since the Unix epoch, UTC.
struct Timestamp {
  std::int64_t epoch_seconds = 0;

  /// Seconds since midnight UTC, in [0, 86400).
  std::int64_t second_of_day() const {
    const std::int64_t r = epoch_seconds % 86400;
    return r < 0 ? r + 86400 : r;
  }

  friend bool operator==(const Timestamp&, const Timestamp&) = default;
};

namespace detail {

inline std::optional<std::int64_t> civil_to_epoch(int y, int mo, int d, int h, int mi, int s) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) {
    return std::nullopt;
  }
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60 + s;
}

inline bool read_int(std::string_view s, std::size_t& pos, std::size_t digits, int& out) {
  if (pos + digits > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < digits; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  pos += digits;
  out = v;
  return true;
}

// "+HH:MM", "+HHMM", "+HH" or "Z"; returns offset seconds east of UTC.
inline std::optional<int> parse_zone(std::string_view z) {
  if (z == "Z" || z == "z" || z.empty()) return 0;
  if (z[0] != '+' && z[0] != '-') return std::nullopt;
  const int sign = z[0] == '-' ? -1 : 1;
  std::size_t pos = 1;
  int hh = 0, mm = 0;
  if (!read_int(z, pos, 2, hh)) return std::nullopt;
  if (pos < z.size() && z[pos] == ':') ++pos;
  if (pos < z.size() && !read_int(z, pos, 2, mm)) return std::nullopt;
  if (pos != z.size() || hh > 23 || mm > 59) return std::nullopt;
  return sign * (hh * 3600 + mm * 60);
}

inline std::optional<std::int64_t> parse_iso8601(std::string_view s) {
  std::size_t pos = 0;
  int y, mo, d, h, mi, sec = 0;
  if (!read_int(s, pos, 4, y) || pos >= s.size() || s[pos++] != '-') return std::nullopt;
  if (!read_int(s, pos, 2, mo) || pos >= s.size() || s[pos++] != '-') return std::nullopt;
  if (!read_int(s, pos, 2, d) || pos >= s.size()) return std::nullopt;
  if (s[pos] != 'T' && s[pos] != 't' && s[pos] != ' ') return std::nullopt;
  ++pos;
  if (!read_int(s, pos, 2, h) || pos >= s.size() || s[pos++] != ':') return std::nullopt;
  if (!read_int(s, pos, 2, mi)) return std::nullopt;
  if (pos < s.size() && s[pos] == ':') {
    ++pos;
    if (!read_int(s, pos, 2, sec)) return std::nullopt;
    if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
      ++pos;
      const std::size_t start = pos;
      while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
      if (pos == start) return std::nullopt;
    }
  }
  const auto zone = parse_zone(s.substr(pos));
  if (!zone) return std::nullopt;
  const auto base = civil_to_epoch(y, mo, d, h, mi, sec);
  if (!base) return std::nullopt;
  return *base - *zone;
}

// Twitter API style: "Thu Jul 29 17:25:38 +0000 2010".
inline std::optional<std::int64_t> parse_twitter_time(std::string_view s) {
  static constexpr std::string_view kMonths[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                 "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  std::istringstream in{std::string(s)};
  std::string weekday, mon, day, clock, zone, year;
  if (!(in >> weekday >> mon >> day >> clock >> zone >> year)) return std::nullopt;
  std::string rest;
  if (in >> rest) return std::nullopt;
  int mo = 0;
  for (int i = 0; i < 12; ++i) {
    if (mon == kMonths[i]) mo = i + 1;
  }
  if (mo == 0 || clock.size() != 8 || clock[2] != ':' || clock[5] != ':') return std::nullopt;
  int d = 0, y = 0, h = 0, mi = 0, sec = 0;
  std::size_t p = 0;
  if (!read_int(day, p, day.size(), d) || day.empty() || day.size() > 2) return std::nullopt;
  p = 0;
  if (!read_int(year, p, year.size(), y) || year.size() != 4) return std::nullopt;
  p = 0;
  if (!read_int(clock, p, 2, h)) return std::nullopt;
  p = 3;
  if (!read_int(clock, p, 2, mi)) return std::nullopt;
  p = 6;
  if (!read_int(clock, p, 2, sec)) return std::nullopt;
  const auto offset = parse_zone(zone);
  const auto base = civil_to_epoch(y, mo, d, h, mi, sec);
  if (!offset || !base) return std::nullopt;
  return *base - *offset;
}

}  // namespace detail

/// Accepts ISO-8601 ("2010-07-29T17:25:38Z", optional fraction and offset),
/// the Twitter API form ("Thu Jul 29 17:25:38 +0000 2010"), or decimal epoch
/// seconds.
inline std::optional<Timestamp> parse_timestamp(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.empty()) return std::nullopt;
  if (auto v = detail::parse_iso8601(text)) return Timestamp{*v};
  if (auto v = detail::parse_twitter_time(text)) return Timestamp{*v};
  try {
    std::size_t used = 0;
    const double secs = std::stod(std::string(text), &used);
    if (used == text.size() && std::isfinite(secs)) {
      return Timestamp{static_cast<std::int64_t>(std::floor(secs))};
    }
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

inline std::string format_iso8601(Timestamp t) {
  using namespace std::chrono;
  const std::int64_t days = (t.epoch_seconds - t.second_of_day()) / 86400;
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  const std::int64_t sod = t.second_of_day();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(sod / 3600), static_cast<int>(sod / 60 % 60),
                static_cast<int>(sod % 60));
  return buf;
}

// ---------------------------------------------------------------------------
// Records

struct TweetRecord {
  std::string text;  // UTF-8
  Timestamp created_at;
  std::optional<std::int64_t> utc_offset_seconds;
  std::optional<std::string> timezone_name;
  std::string user_location;
  Timestamp account_created_at;
  std::string city_label;
};

namespace detail {

inline Timestamp json_timestamp(const nlohmann::json& j, const char* field) {
  if (!j.contains(field)) throw CorpusError(std::string("missing field '") + field + "'");
  const auto& v = j.at(field);
  std::optional<Timestamp> t;
  if (v.is_number()) {
    const double secs = v.get<double>();
    if (std::isfinite(secs)) t = Timestamp{static_cast<std::int64_t>(std::floor(secs))};
  } else if (v.is_string()) {
    t = parse_timestamp(v.get<std::string>());
  }
  if (!t) throw CorpusError(std::string("unparseable timestamp in field '") + field + "'");
  return *t;
}

inline std::string json_string(const nlohmann::json& j, const char* field, bool required) {
  if (!j.contains(field) || j.at(field).is_null()) {
    if (required) throw CorpusError(std::string("missing field '") + field + "'");
    return {};
  }
  if (!j.at(field).is_string()) throw CorpusError(std::string("field '") + field + "' is not a string");
  return j.at(field).get<std::string>();
}

}  // namespace detail

inline TweetRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw CorpusError("record is not a JSON object");
  TweetRecord r;
  r.text = detail::json_string(j, "text", true);
  r.created_at = detail::json_timestamp(j, "created_at");
  r.account_created_at = detail::json_timestamp(j, "account_created_at");
  if (j.contains("utc_offset") && !j.at("utc_offset").is_null()) {
    const auto& v = j.at("utc_offset");
    if (!v.is_number()) throw CorpusError("field 'utc_offset' is not a number");
    r.utc_offset_seconds = static_cast<std::int64_t>(std::llround(v.get<double>()));
  }
  if (j.contains("timezone") && !j.at("timezone").is_null()) {
    r.timezone_name = detail::json_string(j, "timezone", true);
  }
  r.user_location = detail::json_string(j, "user_location", false);
  r.city_label = detail::json_string(j, "city_label", false);
  return r;
}

inline nlohmann::json record_to_json(const TweetRecord& r) {
  nlohmann::json j;
  j["text"] = r.text;
  j["created_at"] = format_iso8601(r.created_at);
  j["utc_offset"] = r.utc_offset_seconds ? nlohmann::json(*r.utc_offset_seconds) : nlohmann::json();
  j["timezone"] = r.timezone_name ? nlohmann::json(*r.timezone_name) : nlohmann::json();
  j["user_location"] = r.user_location;
  j["account_created_at"] = format_iso8601(r.account_created_at);
  j["city_label"] = r.city_label;
  return j;
}

/// One record per non-blank line; errors carry the 1-based line number.
inline std::vector<TweetRecord> read_jsonl(std::istream& in, const std::string& source = "<stream>") {
  std::vector<TweetRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw CorpusError(source + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what());
    } catch (const CorpusError& e) {
      throw CorpusError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<TweetRecord> read_jsonl_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open " + path);
  return read_jsonl(in, path);
}

inline void write_jsonl(std::ostream& out, const std::vector<TweetRecord>& records) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

/// Minimum raw character count for a training tweet to be kept.
inline constexpr std::size_t kMinTrainingChars = 5;

/// Drops training records whose text has fewer than five characters. Never
/// apply to development or test partitions.
inline std::vector<TweetRecord> filter_training(const std::vector<TweetRecord>& records) {
  std::vector<TweetRecord> out;
  for (const auto& r : records) {
    if (utf8_decode(r.text).size() >= kMinTrainingChars) out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vocabularies

inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kUnkId = 1;

namespace detail {

inline std::string escape_symbol(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string unescape_symbol(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out.push_back(s[i]);
      continue;
    }
    switch (s[++i]) {
      case 't': out.push_back('\t'); break;
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      default: out.push_back(s[i]);
    }
  }
  return out;
}

inline std::map<std::string, std::string> parse_header(const std::string& line,
                                                       std::string_view expected_kind) {
  std::istringstream in(line);
  std::string tag, version;
  in >> tag >> version;
  if (tag != "#geonet-vocab") throw CorpusError("not a vocabulary file");
  if (version != "v1") throw CorpusError("unsupported vocabulary version " + version);
  std::map<std::string, std::string> kv;
  std::string item;
  while (in >> item) {
    const auto eq = item.find('=');
    if (eq != std::string::npos) kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  if (kv["kind"] != expected_kind) {
    throw CorpusError("vocabulary kind is '" + kv["kind"] + "', expected '" +
                      std::string(expected_kind) + "'");
  }
  return kv;
}

}  // namespace detail

/// Character vocabulary. Ids 0 and 1 are reserved for padding and unknown
/// characters; retained characters take ids 2.. in code-point order.
class CharVocabulary {
 public:
  CharVocabulary() = default;

  std::int32_t pad_id() const { return kPadId; }
  std::int32_t unk_id() const { return kUnkId; }
  std::size_t min_count() const { return min_count_; }

  /// Total id count including the reserved ids.
  std::size_t size() const { return symbols_.size() + 2; }

  std::int32_t id(char32_t c) const {
    auto it = ids_.find(c);
    return it == ids_.end() ? kUnkId : it->second;
  }

  bool contains(char32_t c) const { return ids_.count(c) > 0; }

  /// Retained symbols in id order (id = index + 2).
  const std::vector<char32_t>& symbols() const { return symbols_; }
  std::size_t count(char32_t c) const {
    auto it = counts_.find(c);
    return it == counts_.end() ? 0 : it->second;
  }

  static CharVocabulary build(const std::vector<std::u32string>& texts, std::size_t min_count) {
    if (min_count < 1) throw std::invalid_argument("min_count must be at least 1");
    if (texts.empty()) throw CorpusError("cannot build a vocabulary from an empty corpus");
    std::map<char32_t, std::size_t> counts;
    for (const auto& t : texts) {
      for (char32_t c : t) ++counts[c];
    }
    CharVocabulary v;
    v.min_count_ = min_count;
    for (const auto& [c, n] : counts) {
      if (n >= min_count) v.insert(c, n);
    }
    return v;
  }

  void save(std::ostream& out) const {
    out << "#geonet-vocab v1 kind=char min_count=" << min_count_ << " size=" << symbols_.size()
        << '\n';
    for (char32_t c : symbols_) {
      out << detail::escape_symbol(utf8_encode(std::u32string(1, c))) << '\t' << counts_.at(c)
          << '\n';
    }
  }

  static CharVocabulary load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw CorpusError("empty vocabulary file");
    auto kv = detail::parse_header(line, "char");
    CharVocabulary v;
    v.min_count_ = std::stoul(kv["min_count"]);
    const std::size_t expected = std::stoul(kv["size"]);
    while (std::getline(in, line)) {
      const auto tab = line.rfind('\t');
      if (tab == std::string::npos) throw CorpusError("malformed vocabulary line: " + line);
      const std::u32string sym = utf8_decode(detail::unescape_symbol(line.substr(0, tab)));
      if (sym.size() != 1) throw CorpusError("vocabulary symbol is not one character: " + line);
      v.insert(sym[0], std::stoul(line.substr(tab + 1)));
    }
    if (v.symbols_.size() != expected) throw CorpusError("vocabulary size does not match header");
    return v;
  }

 private:
  void insert(char32_t c, std::size_t n) {
    ids_[c] = static_cast<std::int32_t>(symbols_.size() + 2);
    symbols_.push_back(c);
    counts_[c] = n;
  }

  std::size_t min_count_ = 1;
  std::map<char32_t, std::int32_t> ids_;
  std::map<char32_t, std::size_t> counts_;
  std::vector<char32_t> symbols_;
};

/// Categorical vocabulary (timezones, city labels). Id 0 is the unknown
/// category; known names take ids 1.. in lexicographic order.
class CategoryVocabulary {
 public:
  static constexpr std::int32_t kUnknown = 0;
  static constexpr std::string_view kUnknownName = "<UNK>";

  std::int32_t unk_id() const { return kUnknown; }
  std::size_t size() const { return names_.size() + 1; }

  std::int32_t id(std::string_view name) const {
    auto it = ids_.find(std::string(name));
    return it == ids_.end() ? kUnknown : it->second;
  }

  const std::string& name(std::int32_t id) const {
    static const std::string unknown(kUnknownName);
    if (id <= 0 || static_cast<std::size_t>(id) > names_.size()) return unknown;
    return names_[static_cast<std::size_t>(id - 1)];
  }

  const std::vector<std::string>& names() const { return names_; }

  static CategoryVocabulary build(const std::vector<std::string>& names) {
    std::map<std::string, std::size_t> counts;
    for (const auto& n : names) {
      if (!n.empty()) ++counts[n];
    }
    CategoryVocabulary v;
    for (const auto& [n, c] : counts) v.insert(n, c);
    return v;
  }

  void save(std::ostream& out) const {
    out << "#geonet-vocab v1 kind=category min_count=1 size=" << names_.size() << '\n';
    for (const auto& n : names_) out << detail::escape_symbol(n) << '\t' << counts_.at(n) << '\n';
  }

  static CategoryVocabulary load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw CorpusError("empty vocabulary file");
    auto kv = detail::parse_header(line, "category");
    const std::size_t expected = std::stoul(kv["size"]);
    CategoryVocabulary v;
    while (std::getline(in, line)) {
      const auto tab = line.rfind('\t');
      if (tab == std::string::npos) throw CorpusError("malformed vocabulary line: " + line);
      v.insert(detail::unescape_symbol(line.substr(0, tab)), std::stoul(line.substr(tab + 1)));
    }
    if (v.names_.size() != expected) throw CorpusError("vocabulary size does not match header");
    return v;
  }

 private:
  void insert(const std::string& n, std::size_t count) {
    ids_[n] = static_cast<std::int32_t>(names_.size() + 1);
    names_.push_back(n);
    counts_[n] = count;
  }

  std::map<std::string, std::int32_t> ids_;
  std::map<std::string, std::size_t> counts_;
  std::vector<std::string> names_;
};

struct Vocabularies {
  CharVocabulary chars;
  CategoryVocabulary timezones;
  CategoryVocabulary cities;
};

/// Default character count threshold.
inline constexpr std::size_t kDefaultMinCharCount = 5;

/// Builds all vocabularies from the (already filtered) training partition.
/// Characters are counted over tweet texts and user locations, which share
/// one character vocabulary.
inline Vocabularies build_vocabularies(const std::vector<TweetRecord>& train,
                                       std::size_t min_count = kDefaultMinCharCount) {
  std::vector<std::u32string> texts;
  std::vector<std::string> tz, cities;
  for (const auto& r : train) {
    texts.push_back(utf8_decode(r.text));
    if (!r.user_location.empty()) texts.push_back(utf8_decode(r.user_location));
    if (r.timezone_name) tz.push_back(*r.timezone_name);
    cities.push_back(r.city_label);
  }
  return {CharVocabulary::build(texts, min_count), CategoryVocabulary::build(tz),
          CategoryVocabulary::build(cities)};
}

// ---------------------------------------------------------------------------
// Encoders

struct EncodedExample {
  std::vector<std::int32_t> text_ids;
  std::vector<std::int32_t> location_ids;
  double tweet_time = 0.0;
  double account_time = 0.0;
  double utc_offset = 0.5;
  std::int32_t timezone_id = 0;
  std::int32_t label_id = 0;
};

struct EncoderConfig {
  std::size_t text_max_len = 300;
  std::size_t location_max_len = 20;
};

/// Fixed-length id sequence: prefix truncation, right padding with pad_id.
inline std::vector<std::int32_t> encode_text(std::u32string_view text, const CharVocabulary& vocab,
                                             std::size_t max_len) {
  if (max_len < 1) throw std::invalid_argument("max_len must be at least 1");
  std::vector<std::int32_t> ids(max_len, vocab.pad_id());
  const std::size_t n = std::min(max_len, text.size());
  for (std::size_t i = 0; i < n; ++i) ids[i] = vocab.id(text[i]);
  return ids;
}

inline std::vector<std::int32_t> encode_text(std::string_view utf8, const CharVocabulary& vocab,
                                             std::size_t max_len) {
  return encode_text(std::u32string_view(utf8_decode(utf8)), vocab, max_len);
}

/// Time of day in [0, 1): seconds since midnight UTC over 86400.
inline double normalize_time_of_day(Timestamp t) {
  return static_cast<double>(t.second_of_day()) / 86400.0;
}

inline constexpr double kMinUtcOffsetHours = -12.0;
inline constexpr double kMaxUtcOffsetHours = 14.0;
inline constexpr double kMissingUtcOffset = 0.5;

/// (hours + 12) / 26 clamped to [0, 1]; a missing offset maps to 0.5.
inline double normalize_utc_offset(std::optional<std::int64_t> offset_seconds) {
  if (!offset_seconds) return kMissingUtcOffset;
  const double hours = static_cast<double>(*offset_seconds) / 3600.0;
  const double u = (hours - kMinUtcOffsetHours) / (kMaxUtcOffsetHours - kMinUtcOffsetHours);
  return std::clamp(u, 0.0, 1.0);
}

inline EncodedExample encode_example(const TweetRecord& r, const Vocabularies& vocabs,
                                     const EncoderConfig& config = {}) {
  EncodedExample e;
  e.text_ids = encode_text(std::string_view(r.text), vocabs.chars, config.text_max_len);
  e.location_ids = encode_text(std::string_view(r.user_location), vocabs.chars,
                               config.location_max_len);
  e.tweet_time = normalize_time_of_day(r.created_at);
  e.account_time = normalize_time_of_day(r.account_created_at);
  e.utc_offset = normalize_utc_offset(r.utc_offset_seconds);
  e.timezone_id = r.timezone_name ? vocabs.timezones.id(*r.timezone_name)
                                  : vocabs.timezones.unk_id();
  e.label_id = vocabs.cities.id(r.city_label);
  return e;
}

inline std::vector<EncodedExample> encode_all(const std::vector<TweetRecord>& records,
                                              const Vocabularies& vocabs,
                                              const EncoderConfig& config = {}) {
  std::vector<EncodedExample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(encode_example(r, vocabs, config));
  return out;
}

}  // namespace geonet
