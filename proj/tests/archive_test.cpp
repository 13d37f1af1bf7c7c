#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "geonet/checkpoint.hpp"
#include "geonet/kv_config.hpp"
#include "geonet/synthetic.hpp"

using namespace geonet;

namespace {

Archive sample_archive() {
  Archive a;
  a.metadata["note"] = "héllo\tworld";
  a.tensors.push_back({"w", {2, 3}, {1, -2, 3.5, 1e-300, -0.0, 42}});
  a.tensors.push_back({"s", {}, {7}});
  return a;
}

ModelConfig tiny_config(const Vocabularies& v) {
  ModelConfig mc;
  mc.text_max_len = 12;
  mc.text_embed_dim = 3;
  mc.text_proj_dim = 4;
  mc.text_window = 3;
  mc.location_max_len = 6;
  mc.location_embed_dim = 3;
  mc.location_filters = 4;
  mc.timezone_dim = 2;
  mc.tweet_time_bins = 5;
  mc.utc_offset_bins = 5;
  mc.account_time_bins = 3;
  mc.penultimate_dim = 6;
  mc.set_vocab_sizes(v);
  return mc;
}

}  // namespace

TEST(Archive, RoundTripIsExact) {
  const auto bytes = encode_archive(sample_archive());
  const auto back = decode_archive(bytes);
  EXPECT_EQ(back.meta("note"), "héllo\tworld");
  ASSERT_EQ(back.tensors.size(), 2u);
  EXPECT_EQ(back.tensors[0].shape, (Shape{2, 3}));
  EXPECT_EQ(back.tensors[0].values, sample_archive().tensors[0].values);
  EXPECT_TRUE(std::signbit(back.tensors[0].values[4]));
  EXPECT_EQ(encode_archive(back), bytes);
}

TEST(Archive, HeaderLayoutIsLittleEndian) {
  const auto bytes = encode_archive(Archive{});
  ASSERT_EQ(bytes.size(), 8u + 4 + 4 + 4);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "GEONETPA");
  EXPECT_EQ(bytes[8], 1);
  EXPECT_EQ(bytes[9], 0);
}

TEST(Archive, RejectsCorruptInput) {
  auto bytes = encode_archive(sample_archive());
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_archive(bad_magic), ArchiveError);
  auto bad_version = bytes;
  bad_version[8] = 9;
  EXPECT_THROW(decode_archive(bad_version), ArchiveError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_THROW(decode_archive(truncated), ArchiveError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_archive(trailing), ArchiveError);
  EXPECT_THROW(load_archive("/nonexistent/dir/file.bin"), ArchiveError);
  EXPECT_THROW(sample_archive().meta("absent"), ArchiveError);
}

TEST(Archive, LoadParamsChecksShapes) {
  ParamSet ps;
  ps.add("w", Tensor::zeros({3, 2}, true));
  try {
    load_params(sample_archive(), ps);
    FAIL() << "expected a shape error";
  } catch (const ArchiveError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2, 3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[3, 2]"), std::string::npos) << msg;
  }
  ParamSet missing;
  missing.add("nope", Tensor::zeros({1}, true));
  EXPECT_THROW(load_params(sample_archive(), missing), ArchiveError);
}

TEST(KeyValues, ParsesCommentsAndReportsLines) {
  std::istringstream in("# comment\n a = 1 \n\nb=two words\n");
  const auto kv = parse_key_values(in);
  EXPECT_EQ(kv.at("a"), "1");
  EXPECT_EQ(kv.at("b"), "two words");
  std::istringstream bad("a = 1\nnonsense\n");
  try {
    parse_key_values(bad);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(ModelConfig, FullSizeDefaultsAndRoundTrip) {
  const auto tu = ModelConfig::tweet_user();
  EXPECT_EQ(tu.text_embed_dim, 200u);
  EXPECT_EQ(tu.text_window, 10u);
  EXPECT_EQ(tu.text_proj_dim, 400u);
  EXPECT_EQ(tu.text_max_len, 300u);
  EXPECT_EQ(tu.location_max_len, 20u);
  EXPECT_EQ(tu.location_embed_dim, 300u);
  EXPECT_EQ(tu.location_span, 3u);
  EXPECT_EQ(tu.location_filters, 300u);
  EXPECT_EQ(tu.timezone_dim, 50u);
  EXPECT_EQ(tu.tweet_time_bins, 50u);
  EXPECT_EQ(tu.utc_offset_bins, 50u);
  EXPECT_EQ(tu.account_time_bins, 10u);
  EXPECT_EQ(tu.penultimate_dim, 400u);
  EXPECT_EQ(tu.dropout, 0.2);
  const auto mo = ModelConfig::message_only();
  EXPECT_EQ(mo.text_proj_dim, 600u);
  EXPECT_EQ(mo.features, FeatureSet::message_only());

  ModelConfig c;
  c.features = FeatureSet::all().without(Feature::Timezone);
  c.noise_sigma = 0.1;
  c.text_window = 7;
  ModelConfig d;
  d.apply(c.to_key_values());
  EXPECT_EQ(d.to_key_values(), c.to_key_values());
  EXPECT_THROW(d.apply({{"text_window", "seven"}}), std::invalid_argument);
}

TEST(FeatureSet, ParseAndFormat) {
  EXPECT_EQ(FeatureSet::parse("message-only"), FeatureSet::message_only());
  EXPECT_EQ(FeatureSet::parse("tweet-user"), FeatureSet::all());
  const auto s = FeatureSet::parse("location, text");
  EXPECT_TRUE(s.has(Feature::Text));
  EXPECT_TRUE(s.has(Feature::Location));
  EXPECT_FALSE(s.has(Feature::Timezone));
  EXPECT_EQ(s.to_string(), "text,location");
  EXPECT_THROW(FeatureSet::parse("elevation"), std::invalid_argument);
  EXPECT_THROW(FeatureSet::parse(""), std::invalid_argument);
}

TEST(Checkpoint, RoundTripPreservesPredictions) {
  SyntheticConfig sc;
  sc.cities = 3;
  sc.train = 30;
  sc.dev = 10;
  sc.test = 0;
  sc.max_text_chars = 16;
  const auto corpus = generate_synthetic(sc);
  const auto vocabs = build_vocabularies(corpus.train, 1);
  const auto mc = tiny_config(vocabs);
  Rng rng(5);
  GeoModel model(mc, rng);
  const auto examples = encode_all(corpus.dev, vocabs, mc.encoder());
  std::vector<std::size_t> idx(examples.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const auto batch = make_batch(examples, idx);

  const auto path = (std::filesystem::temp_directory_path() / "geonet_ckpt_test.bin").string();
  save_checkpoint(path, model, vocabs, {{"seed", "5"}});
  const auto loaded = load_checkpoint(path);
  std::remove(path.c_str());
  EXPECT_EQ(loaded.metadata.at("seed"), "5");
  EXPECT_EQ(loaded.config.to_key_values(), mc.to_key_values());
  const auto a = model.evaluate(batch).probs, b = loaded.model->evaluate(batch).probs;
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.at(i), b.at(i));
  EXPECT_EQ(encode_archive(make_checkpoint_archive(*loaded.model, loaded.vocabs, {{"seed", "5"}})),
            encode_archive(make_checkpoint_archive(model, vocabs, {{"seed", "5"}})));
}

TEST(Checkpoint, DimensionMismatchIsReported) {
  SyntheticConfig sc;
  sc.cities = 2;
  sc.train = 10;
  sc.dev = 0;
  sc.test = 0;
  const auto corpus = generate_synthetic(sc);
  const auto vocabs = build_vocabularies(corpus.train, 1);
  Rng rng(1);
  GeoModel model(tiny_config(vocabs), rng);
  auto archive = make_checkpoint_archive(model, vocabs);

  auto wrong_cfg = archive;
  auto cfg = tiny_config(vocabs);
  cfg.penultimate_dim = 7;
  std::ostringstream os;
  write_key_values(os, cfg.to_key_values());
  wrong_cfg.metadata["model_config"] = os.str();
  EXPECT_THROW(checkpoint_from_archive(wrong_cfg), ArchiveError);

  auto wrong_vocab = archive;
  std::ostringstream vs;
  CategoryVocabulary::build({"x"}).save(vs);
  wrong_vocab.metadata["vocab.cities"] = vs.str();
  EXPECT_THROW(checkpoint_from_archive(wrong_vocab), ArchiveError);
}
