#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "geonet/corpus.hpp"
#include "geonet/fusion.hpp"
#include "geonet/kv_config.hpp"
#include "geonet/location_network.hpp"
#include "geonet/params.hpp"
#include "geonet/rbf_network.hpp"
#include "geonet/sequence.hpp"
#include "geonet/text_network.hpp"

namespace geonet {

/// The six metadata features, in concatenation order.
enum class Feature : std::uint8_t { Text, TweetTime, UtcOffset, Timezone, Location, AccountTime };

inline constexpr std::array<Feature, 6> kAllFeatures = {
    Feature::Text,     Feature::TweetTime, Feature::UtcOffset,
    Feature::Timezone, Feature::Location,  Feature::AccountTime};

inline std::string feature_name(Feature f) {
  switch (f) {
    case Feature::Text: return "text";
    case Feature::TweetTime: return "tweet-time";
    case Feature::UtcOffset: return "utc-offset";
    case Feature::Timezone: return "timezone";
    case Feature::Location: return "location";
    case Feature::AccountTime: return "account-time";
  }
  return "?";
}

inline Feature parse_feature(const std::string& name) {
  for (Feature f : kAllFeatures) {
    if (feature_name(f) == name) return f;
  }
  throw std::invalid_argument("unknown feature '" + name + "'");
}

class FeatureSet {
 public:
  constexpr FeatureSet() = default;

  static constexpr FeatureSet all() {
    FeatureSet s;
    s.bits_ = 0x3f;
    return s;
  }
  static constexpr FeatureSet message_only() { return FeatureSet{}.with(Feature::Text); }

  constexpr bool has(Feature f) const { return bits_ & bit(f); }
  constexpr FeatureSet with(Feature f) const {
    FeatureSet s = *this;
    s.bits_ |= bit(f);
    return s;
  }
  constexpr FeatureSet without(Feature f) const {
    FeatureSet s = *this;
    s.bits_ &= static_cast<std::uint8_t>(~bit(f));
    return s;
  }
  constexpr bool empty() const { return bits_ == 0; }

  std::vector<Feature> list() const {
    std::vector<Feature> out;
    for (Feature f : kAllFeatures) {
      if (has(f)) out.push_back(f);
    }
    return out;
  }

  std::string to_string() const {
    std::string out;
    for (Feature f : list()) out += (out.empty() ? "" : ",") + feature_name(f);
    return out;
  }

  static FeatureSet parse(const std::string& text) {
    if (text == "message-only") return message_only();
    if (text == "tweet-user" || text == "all") return all();
    FeatureSet s;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
      if (!trim(item).empty()) s = s.with(parse_feature(trim(item)));
    }
    if (s.empty()) throw std::invalid_argument("empty feature set");
    return s;
  }

  friend constexpr bool operator==(FeatureSet, FeatureSet) = default;

 private:
  static constexpr std::uint8_t bit(Feature f) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(f));
  }
  std::uint8_t bits_ = 0;
};

/// Architecture and regularization settings. Defaults are the full-size
/// tweet+user hyper-parameters.
struct ModelConfig {
  FeatureSet features = FeatureSet::all();
  std::size_t char_vocab_size = 0;
  std::size_t timezone_count = 0;
  std::size_t class_count = 0;

  std::size_t text_max_len = 300;
  std::size_t text_embed_dim = 200;
  std::size_t text_hidden_dim = 0;  // 0: same as embed dim
  std::size_t text_proj_dim = 400;
  std::size_t text_window = 10;
  std::size_t attention_dim = 0;    // 0: same as projection dim

  std::size_t location_max_len = 20;
  std::size_t location_embed_dim = 300;
  std::size_t location_span = 3;
  std::size_t location_filters = 300;

  std::size_t timezone_dim = 50;
  std::size_t tweet_time_bins = 50;
  std::size_t utc_offset_bins = 50;
  std::size_t account_time_bins = 10;

  std::size_t penultimate_dim = 400;
  double dropout = 0.2;
  double noise_sigma = 0.0;
  double extrema_alpha = 0.0;
  double sigma_floor = kDefaultSigmaFloor;

  static ModelConfig tweet_user() { return {}; }

  static ModelConfig message_only() {
    ModelConfig c;
    c.features = FeatureSet::message_only();
    c.text_proj_dim = 600;
    return c;
  }

  EncoderConfig encoder() const { return {text_max_len, location_max_len}; }

  void set_vocab_sizes(const Vocabularies& v) {
    char_vocab_size = v.chars.size();
    timezone_count = v.timezones.size();
    class_count = v.cities.size();
  }

  KeyValues to_key_values() const {
    auto num = [](double x) {
      std::ostringstream os;
      os.precision(17);
      os << x;
      return os.str();
    };
    return {{"features", features.to_string()},
            {"char_vocab_size", std::to_string(char_vocab_size)},
            {"timezone_count", std::to_string(timezone_count)},
            {"class_count", std::to_string(class_count)},
            {"text_max_len", std::to_string(text_max_len)},
            {"text_embed_dim", std::to_string(text_embed_dim)},
            {"text_hidden_dim", std::to_string(text_hidden_dim)},
            {"text_proj_dim", std::to_string(text_proj_dim)},
            {"text_window", std::to_string(text_window)},
            {"attention_dim", std::to_string(attention_dim)},
            {"location_max_len", std::to_string(location_max_len)},
            {"location_embed_dim", std::to_string(location_embed_dim)},
            {"location_span", std::to_string(location_span)},
            {"location_filters", std::to_string(location_filters)},
            {"timezone_dim", std::to_string(timezone_dim)},
            {"tweet_time_bins", std::to_string(tweet_time_bins)},
            {"utc_offset_bins", std::to_string(utc_offset_bins)},
            {"account_time_bins", std::to_string(account_time_bins)},
            {"penultimate_dim", std::to_string(penultimate_dim)},
            {"dropout", num(dropout)},
            {"noise_sigma", num(noise_sigma)},
            {"extrema_alpha", num(extrema_alpha)},
            {"sigma_floor", num(sigma_floor)}};
  }

  /// Keys absent from `kv` keep their current values.
  void apply(const KeyValues& kv) {
    auto size = [&](const char* key, std::size_t& field) {
      if (auto it = kv.find(key); it != kv.end()) field = kv_size(key, it->second);
    };
    auto real = [&](const char* key, double& field) {
      if (auto it = kv.find(key); it != kv.end()) field = kv_real(key, it->second);
    };
    if (auto it = kv.find("features"); it != kv.end()) features = FeatureSet::parse(it->second);
    size("char_vocab_size", char_vocab_size);
    size("timezone_count", timezone_count);
    size("class_count", class_count);
    size("text_max_len", text_max_len);
    size("text_embed_dim", text_embed_dim);
    size("text_hidden_dim", text_hidden_dim);
    size("text_proj_dim", text_proj_dim);
    size("text_window", text_window);
    size("attention_dim", attention_dim);
    size("location_max_len", location_max_len);
    size("location_embed_dim", location_embed_dim);
    size("location_span", location_span);
    size("location_filters", location_filters);
    size("timezone_dim", timezone_dim);
    size("tweet_time_bins", tweet_time_bins);
    size("utc_offset_bins", utc_offset_bins);
    size("account_time_bins", account_time_bins);
    size("penultimate_dim", penultimate_dim);
    real("dropout", dropout);
    real("noise_sigma", noise_sigma);
    real("extrema_alpha", extrema_alpha);
    real("sigma_floor", sigma_floor);
  }
};

/// Columnar view of a minibatch.
struct Batch {
  IdMatrix text;
  IdMatrix location;
  std::vector<double> tweet_time;
  std::vector<double> utc_offset;
  std::vector<double> account_time;
  std::vector<std::int32_t> timezone;
  std::vector<std::int32_t> labels;

  std::size_t size() const { return labels.size(); }
};

inline Batch make_batch(std::span<const EncodedExample> examples,
                        std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("make_batch: empty batch");
  const auto& first = examples[indices.front()];
  Batch b;
  b.text = IdMatrix(indices.size(), first.text_ids.size());
  b.location = IdMatrix(indices.size(), first.location_ids.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& e = examples[indices[r]];
    if (e.text_ids.size() != b.text.cols || e.location_ids.size() != b.location.cols) {
      throw std::invalid_argument("make_batch: examples have differing sequence lengths");
    }
    std::copy(e.text_ids.begin(), e.text_ids.end(), b.text.ids.begin() + static_cast<std::ptrdiff_t>(r * b.text.cols));
    std::copy(e.location_ids.begin(), e.location_ids.end(),
              b.location.ids.begin() + static_cast<std::ptrdiff_t>(r * b.location.cols));
    b.tweet_time.push_back(e.tweet_time);
    b.utc_offset.push_back(e.utc_offset);
    b.account_time.push_back(e.account_time);
    b.timezone.push_back(e.timezone_id);
    b.labels.push_back(e.label_id);
  }
  return b;
}

/// Full network: one sub-network per active feature, fusion, penultimate
/// layer and softmax classifier.
class GeoModel {
 public:
  struct Output {
    Tensor fused;      // f-hat after noise/dropout
    Tensor r;          // penultimate representation [B,R]
    Tensor probs;      // [B,K]
    Tensor attention;  // [B,S]; undefined without the text feature
  };

  GeoModel(const ModelConfig& config, Rng& rng) : config_(config) {
    if (config.features.empty()) throw std::invalid_argument("model needs at least one feature");
    if (config.class_count == 0) throw std::invalid_argument("model needs at least one class");
    if (config.dropout < 0.0 || config.dropout >= 1.0) {
      throw std::invalid_argument("dropout rate must be in [0, 1)");
    }
    std::size_t fused_dim = 0;
    if (config.features.has(Feature::Text)) {
      text_.emplace(TextNetConfig{config.char_vocab_size, config.text_embed_dim,
                                  config.text_hidden_dim, config.text_proj_dim,
                                  config.text_window, config.attention_dim},
                    rng);
      if (config.text_window > config.text_max_len) {
        throw std::invalid_argument("text window exceeds text max length");
      }
      text_->register_params(params_, "text.");
      fused_dim += text_->output_dim();
    }
    if (config.features.has(Feature::TweetTime)) {
      tweet_time_.emplace(config.tweet_time_bins, config.sigma_floor);
      tweet_time_->register_params(params_, "tweet_time.");
      fused_dim += tweet_time_->bins();
    }
    if (config.features.has(Feature::UtcOffset)) {
      utc_offset_.emplace(config.utc_offset_bins, config.sigma_floor);
      utc_offset_->register_params(params_, "utc_offset.");
      fused_dim += utc_offset_->bins();
    }
    if (config.features.has(Feature::Timezone)) {
      timezone_.emplace(config.timezone_count, config.timezone_dim, rng);
      timezone_->register_params(params_, "timezone.");
      fused_dim += timezone_->output_dim();
    }
    if (config.features.has(Feature::Location)) {
      if (config.location_span > config.location_max_len) {
        throw std::invalid_argument("location span exceeds location max length");
      }
      location_.emplace(LocConvConfig{config.char_vocab_size, config.location_embed_dim,
                                      config.location_span, config.location_filters},
                        rng);
      location_->register_params(params_, "location.");
      fused_dim += location_->output_dim();
    }
    if (config.features.has(Feature::AccountTime)) {
      account_time_.emplace(config.account_time_bins, config.sigma_floor);
      account_time_->register_params(params_, "account_time.");
      fused_dim += account_time_->bins();
    }
    fusion_.emplace(fused_dim, config.penultimate_dim, config.class_count, rng);
    fusion_->register_params(params_, "fusion.");
  }

  GeoModel(const GeoModel&) = delete;
  GeoModel& operator=(const GeoModel&) = delete;

  const ModelConfig& config() const { return config_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  std::size_t fused_dim() const { return fusion_->input_dim(); }
  std::size_t penultimate_dim() const { return fusion_->penultimate_dim(); }
  std::size_t class_count() const { return fusion_->classes(); }

  const TextNetwork* text() const { return text_ ? &*text_ : nullptr; }
  const RbfNetwork* tweet_time() const { return tweet_time_ ? &*tweet_time_ : nullptr; }
  const RbfNetwork* utc_offset() const { return utc_offset_ ? &*utc_offset_ : nullptr; }
  const RbfNetwork* account_time() const { return account_time_ ? &*account_time_ : nullptr; }
  const TimezoneEmbedding* timezone() const { return timezone_ ? &*timezone_ : nullptr; }
  const LocationNetwork* location() const { return location_ ? &*location_ : nullptr; }
  const FusionClassifier& fusion() const { return *fusion_; }

  /// Feature vectors in concatenation order.
  std::vector<Tensor> features(const Batch& batch, Tensor* attention = nullptr) const {
    std::vector<Tensor> fs;
    if (text_) {
      auto out = text_->forward(batch.text);
      if (attention) *attention = out.weights;
      fs.push_back(out.features);
    }
    if (tweet_time_) fs.push_back(tweet_time_->forward(batch.tweet_time));
    if (utc_offset_) fs.push_back(utc_offset_->forward(batch.utc_offset));
    if (timezone_) fs.push_back(timezone_->forward(batch.timezone));
    if (location_) fs.push_back(location_->forward(batch.location));
    if (account_time_) fs.push_back(account_time_->forward(batch.account_time));
    return fs;
  }

  Output forward(const Batch& batch, bool train, Rng& rng) const {
    Output out;
    const auto fs = features(batch, &out.attention);
    out.fused = fuse(fs, config_.noise_sigma, 1.0 - config_.dropout, rng, train);
    out.r = fusion_->penultimate(out.fused);
    out.probs = fusion_->classify(out.r);
    return out;
  }

  /// Eval-mode forward; consumes no randomness.
  Output evaluate(const Batch& batch) const {
    Rng unused(0);
    return forward(batch, false, unused);
  }

  /// Cross-entropy plus, when alpha > 0, the extrema loss on r.
  Tensor loss(const Output& out, std::span<const std::int32_t> labels) const {
    Tensor total = cross_entropy(out.probs, labels);
    if (config_.extrema_alpha > 0.0) total = add(total, extrema_loss(out.r, config_.extrema_alpha));
    return total;
  }

  /// Post-optimizer constraints.
  void after_step() {
    if (tweet_time_) tweet_time_->clamp_sigma();
    if (utc_offset_) utc_offset_->clamp_sigma();
    if (account_time_) account_time_->clamp_sigma();
  }

  std::vector<std::int32_t> predict(const Batch& batch) const {
    return argmax_rows(evaluate(batch).probs);
  }

 private:
  ModelConfig config_;
  ParamSet params_;
  std::optional<TextNetwork> text_;
  std::optional<RbfNetwork> tweet_time_, utc_offset_, account_time_;
  std::optional<TimezoneEmbedding> timezone_;
  std::optional<LocationNetwork> location_;
  std::optional<FusionClassifier> fusion_;
};

/// Runs `fn(batch, indices)` over `examples` in consecutive chunks.
template <typename Fn>
void for_each_chunk(std::span<const EncodedExample> examples, std::size_t chunk, Fn&& fn) {
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < examples.size(); start += chunk) {
    idx.clear();
    for (std::size_t i = start; i < std::min(examples.size(), start + chunk); ++i) idx.push_back(i);
    fn(make_batch(examples, idx), std::span<const std::size_t>(idx));
  }
}

/// Penultimate representations for every example, row-major [N,R].
inline std::vector<std::vector<double>> penultimate_vectors(const GeoModel& model,
                                                            std::span<const EncodedExample> examples,
                                                            std::size_t chunk = 256) {
  std::vector<std::vector<double>> out;
  out.reserve(examples.size());
  const std::size_t width = model.penultimate_dim();
  for_each_chunk(examples, chunk, [&](const Batch& b, std::span<const std::size_t>) {
    const auto result = model.evaluate(b);
    const auto r = result.r.values();
    for (std::size_t i = 0; i < b.size(); ++i) {
      out.emplace_back(r.begin() + static_cast<std::ptrdiff_t>(i * width),
                       r.begin() + static_cast<std::ptrdiff_t>((i + 1) * width));
    }
  });
  return out;
}

}  // namespace geonet
