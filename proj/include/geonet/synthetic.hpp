#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "geonet/corpus.hpp"
#include "geonet/rng.hpp"

namespace geonet {

enum class SyntheticMode {
  // Location, text, tweet time and timezone all carry city signal.
  Mixed,
  // Only the user location names the city; every other field is noise.
  LocationOnly,
};

struct SyntheticConfig {
  std::size_t cities = 20;
  std::size_t train = 10000;
  std::size_t dev = 1000;
  std::size_t test = 1000;
  std::uint64_t seed = 7;
  SyntheticMode mode = SyntheticMode::Mixed;
  // Distinct surface forms per city, shared by location and text.
  std::size_t aliases_per_city = 3;
  // Consecutive cities share a timezone; within a zone cities differ by peak hour.
  std::size_t cities_per_timezone = 4;
  double location_token_rate = 0.85;
  double text_token_rate = 0.6;
  double timezone_prior = 0.8;
  double missing_timezone_rate = 0.05;
  double time_sigma_hours = 1.5;
  std::size_t max_text_chars = 40;
};

struct SyntheticCity {
  std::string label;
  std::vector<std::string> aliases;  // aliases[0] also names the label
  std::string timezone;
  int utc_offset_hours = 0;
  double peak_utc_hour = 0.0;
};

struct SyntheticCorpus {
  std::vector<SyntheticCity> cities;
  std::vector<TweetRecord> train, dev, test;
};

namespace detail {

inline std::string random_word(Rng& rng, std::size_t min_len, std::size_t max_len) {
  static constexpr char kLetters[] = "abcdefghijklmnopqrstuvwxyz";
  const std::size_t len = min_len + rng.index(max_len - min_len + 1);
  std::string w;
  for (std::size_t i = 0; i < len; ++i) w += kLetters[rng.index(26)];
  return w;
}

inline Timestamp synthetic_time(Rng& rng, std::int64_t day_lo, std::int64_t day_hi, double hour) {
  const std::int64_t day = day_lo + static_cast<std::int64_t>(rng.index(static_cast<std::uint64_t>(day_hi - day_lo)));
  double h = std::fmod(hour, 24.0);
  if (h < 0) h += 24.0;
  return {day * 86400 + static_cast<std::int64_t>(h * 3600.0)};
}

}  // namespace detail

/// Deterministic labelled corpus with planted location-indicative signal.
inline SyntheticCorpus generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.cities < 2) throw std::invalid_argument("synthetic corpus needs at least two cities");
  if (cfg.max_text_chars < 16) throw std::invalid_argument("synthetic texts need at least 16 characters");
  if (cfg.cities_per_timezone == 0) throw std::invalid_argument("synthetic timezones need at least one city");
  if (cfg.aliases_per_city == 0) throw std::invalid_argument("synthetic cities need at least one alias");
  Rng rng(cfg.seed);
  SyntheticCorpus corpus;

  std::set<std::string> used;
  std::vector<std::string> zone_names;
  for (std::size_t c = 0; c < cfg.cities; ++c) {
    SyntheticCity city;
    for (std::size_t a = 0; a < cfg.aliases_per_city; ++a) {
      std::string token;
      do {
        token = detail::random_word(rng, 6, 6);
      } while (!used.insert(token).second);
      token[0] = static_cast<char>(token[0] - 'a' + 'A');
      city.aliases.push_back(token);
    }
    char label[64];
    std::snprintf(label, sizeof label, "%s-%02zu-sy", city.aliases[0].c_str(), c);
    city.label = label;
    for (char& ch : city.label) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    const std::size_t zone = c / cfg.cities_per_timezone;
    const std::size_t zones = (cfg.cities + cfg.cities_per_timezone - 1) / cfg.cities_per_timezone;
    city.utc_offset_hours = -11 + static_cast<int>((zone * 24) / zones);
    city.timezone = zone < zone_names.size() ? zone_names[zone] : zone_names.emplace_back("Zone/" + city.aliases[0]);
    // Activity peaks at 12, 15, 18 or 21 local time.
    city.peak_utc_hour = 12.0 + 3.0 * static_cast<double>(c % 4) - city.utc_offset_hours;
    corpus.cities.push_back(city);
  }

  std::vector<std::string> filler(200);
  for (auto& w : filler) w = detail::random_word(rng, 2, 6);
  static const std::vector<std::string> kVagueLocations = {"", "home", "earth", "somewhere",
                                                           "the world", "everywhere", "here"};
  constexpr std::int64_t kTweetDayLo = 16801, kTweetDayHi = 17166;    // 2016
  constexpr std::int64_t kAccountDayLo = 14245, kAccountDayHi = 16801;  // 2009-2015
  const std::size_t ncity = cfg.cities;

  auto make_text = [&](const std::string* token) {
    std::vector<std::string> words;
    std::size_t len = token ? token->size() : 0;
    while (true) {
      const std::string& w = filler[rng.index(filler.size())];
      if (len + w.size() + 1 > cfg.max_text_chars - 2 || words.size() >= 7) break;
      len += w.size() + 1;
      words.push_back(w);
    }
    if (token) words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng.index(words.size() + 1)), *token);
    std::string text;
    for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
    return text;
  };

  auto make_record = [&](std::size_t c) {
    const SyntheticCity& city = corpus.cities[c];
    auto alias = [&]() -> const std::string& { return city.aliases[rng.index(city.aliases.size())]; };
    TweetRecord r;
    r.city_label = city.label;
    r.account_created_at = detail::synthetic_time(rng, kAccountDayLo, kAccountDayHi, rng.uniform(0.0, 24.0));
    if (cfg.mode == SyntheticMode::LocationOnly) {
      r.text = make_text(nullptr);
      r.created_at = detail::synthetic_time(rng, kTweetDayLo, kTweetDayHi, rng.uniform(0.0, 24.0));
      const auto& zone = corpus.cities[rng.index(ncity)];
      r.timezone_name = zone.timezone;
      r.utc_offset_seconds = static_cast<std::int64_t>(zone.utc_offset_hours) * 3600;
      r.user_location = alias();
      if (rng.bernoulli(0.5)) r.user_location += " " + filler[rng.index(filler.size())];
      return r;
    }
    r.text = make_text(rng.bernoulli(cfg.text_token_rate) ? &alias() : nullptr);
    r.created_at = detail::synthetic_time(rng, kTweetDayLo, kTweetDayHi,
                                          rng.normal(city.peak_utc_hour, cfg.time_sigma_hours));
    if (!rng.bernoulli(cfg.missing_timezone_rate)) {
      const auto& zone = rng.bernoulli(cfg.timezone_prior) ? city : corpus.cities[rng.index(ncity)];
      r.timezone_name = zone.timezone;
      r.utc_offset_seconds = static_cast<std::int64_t>(zone.utc_offset_hours) * 3600;
    }
    if (rng.bernoulli(cfg.location_token_rate)) {
      const std::string& token = alias();
      r.user_location = rng.bernoulli(0.5) ? token : token + ", " + filler[rng.index(filler.size())];
    } else {
      r.user_location = kVagueLocations[rng.index(kVagueLocations.size())];
    }
    return r;
  };

  auto fill = [&](std::vector<TweetRecord>& out, std::size_t n) {
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(make_record(rng.index(ncity)));
  };
  fill(corpus.train, cfg.train);
  fill(corpus.dev, cfg.dev);
  fill(corpus.test, cfg.test);
  return corpus;
}

}  // namespace geonet
