#pragma once

#include <map>
#include <memory>
#include <sstream>
#include <string>

#include "geonet/archive.hpp"
#include "geonet/corpus.hpp"
#include "geonet/model.hpp"

namespace geonet {

/// A trained model together with everything needed to encode new inputs.
struct Checkpoint {
  ModelConfig config;
  Vocabularies vocabs;
  std::unique_ptr<GeoModel> model;
  std::map<std::string, std::string> metadata;
};

inline Archive make_checkpoint_archive(const GeoModel& model, const Vocabularies& vocabs,
                                       const std::map<std::string, std::string>& extra = {}) {
  Archive a;
  a.metadata = extra;
  std::ostringstream cfg, chars, tz, cities;
  write_key_values(cfg, model.config().to_key_values());
  vocabs.chars.save(chars);
  vocabs.timezones.save(tz);
  vocabs.cities.save(cities);
  a.metadata["model_config"] = cfg.str();
  a.metadata["vocab.chars"] = chars.str();
  a.metadata["vocab.timezones"] = tz.str();
  a.metadata["vocab.cities"] = cities.str();
  store_params(a, model.params());
  return a;
}

inline void save_checkpoint(const std::string& path, const GeoModel& model,
                            const Vocabularies& vocabs,
                            const std::map<std::string, std::string>& extra = {}) {
  save_archive(path, make_checkpoint_archive(model, vocabs, extra));
}

inline Checkpoint checkpoint_from_archive(const Archive& a) {
  Checkpoint c;
  {
    std::istringstream in(a.meta("model_config"));
    c.config.apply(parse_key_values(in));
  }
  {
    std::istringstream in(a.meta("vocab.chars"));
    c.vocabs.chars = CharVocabulary::load(in);
  }
  {
    std::istringstream in(a.meta("vocab.timezones"));
    c.vocabs.timezones = CategoryVocabulary::load(in);
  }
  {
    std::istringstream in(a.meta("vocab.cities"));
    c.vocabs.cities = CategoryVocabulary::load(in);
  }
  if (c.config.char_vocab_size != c.vocabs.chars.size() ||
      c.config.timezone_count != c.vocabs.timezones.size() ||
      c.config.class_count != c.vocabs.cities.size()) {
    throw ArchiveError("checkpoint vocabularies do not match the model configuration");
  }
  Rng rng(0);
  c.model = std::make_unique<GeoModel>(c.config, rng);
  load_params(a, c.model->params());
  for (const auto& [k, v] : a.metadata) {
    if (k != "model_config" && k.rfind("vocab.", 0) != 0) c.metadata[k] = v;
  }
  return c;
}

inline Checkpoint load_checkpoint(const std::string& path) {
  return checkpoint_from_archive(load_archive(path));
}

}  // namespace geonet
