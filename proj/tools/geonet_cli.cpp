// geonet: train, evaluate, analyse and hash tweet geolocation models.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "geonet/checkpoint.hpp"
#include "geonet/hashing.hpp"
#include "geonet/synthetic.hpp"
#include "geonet/trainer.hpp"

using namespace geonet;
namespace fs = std::filesystem;

namespace {

constexpr int kCliFormatVersion = 1;

struct CliError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Resolved model and training configuration. Precedence, lowest first:
/// preset defaults, config file, --set pairs, dedicated flags.
struct Settings {
  std::string preset = "tweet-user";
  std::string config_file;
  std::vector<std::string> set_pairs;
  std::optional<std::size_t> epochs, batch_size, penultimate_dim;
  std::optional<double> learning_rate, noise_sigma, extrema_alpha;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> features;
  std::size_t min_char_count = kDefaultMinCharCount;

  void add_to(CLI::App* app) {
    app->add_option("--preset", preset, "tweet-user or message-only defaults")
        ->check(CLI::IsMember({"tweet-user", "message-only"}));
    app->add_option("--config", config_file, "key = value configuration file")->check(CLI::ExistingFile);
    app->add_option("--set", set_pairs, "override one configuration key (key=value)");
    app->add_option("--epochs", epochs);
    app->add_option("--batch-size", batch_size);
    app->add_option("--lr", learning_rate, "Adam learning rate");
    app->add_option("--seed", seed);
    app->add_option("--features", features, "comma-separated feature list or a preset name");
    app->add_option("--bits", penultimate_dim, "penultimate width R (code length)");
    app->add_option("--noise-sigma", noise_sigma);
    app->add_option("--extrema-alpha", extrema_alpha);
    app->add_option("--min-char-count", min_char_count, "character vocabulary threshold");
  }

  std::pair<ModelConfig, TrainConfig> resolve() const {
    ModelConfig mc = preset == "message-only" ? ModelConfig::message_only() : ModelConfig::tweet_user();
    TrainConfig tc;
    KeyValues kv;
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw CliError("cannot read config file " + config_file);
      try {
        kv = parse_key_values(in);
      } catch (const std::exception& e) {
        throw CliError(config_file + ": " + e.what());
      }
    }
    for (const auto& pair : set_pairs) {
      const auto eq = pair.find('=');
      if (eq == std::string::npos) throw CliError("--set expects key=value, got '" + pair + "'");
      kv[trim(pair.substr(0, eq))] = trim(pair.substr(eq + 1));
    }
    const auto model_keys = mc.to_key_values();
    const auto train_keys = tc.to_key_values();
    for (const auto& [k, v] : kv) {
      if (!model_keys.count(k) && !train_keys.count(k)) throw CliError("unknown configuration key '" + k + "'");
    }
    mc.apply(kv);
    tc.apply(kv);
    if (epochs) tc.epochs = *epochs;
    if (batch_size) tc.batch_size = *batch_size;
    if (learning_rate) tc.learning_rate = *learning_rate;
    if (seed) tc.seed = *seed;
    if (features) mc.features = FeatureSet::parse(*features);
    if (penultimate_dim) mc.penultimate_dim = *penultimate_dim;
    if (noise_sigma) mc.noise_sigma = *noise_sigma;
    if (extrema_alpha) mc.extrema_alpha = *extrema_alpha;
    return {mc, tc};
  }
};

fs::path prepare_dir(const std::string& dir) {
  fs::create_directories(dir);
  return fs::path(dir);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CliError("cannot write " + path.string());
  return out;
}

/// Every subcommand records what it ran with next to its outputs.
void write_run_config(const fs::path& dir, const std::string& command, std::uint64_t seed,
                      const KeyValues& extra) {
  auto out = open_out(dir / (command + ".run_config.txt"));
  out << "# geonet " << command << " run configuration\n";
  KeyValues kv = extra;
  kv["format_version"] = std::to_string(kCliFormatVersion);
  kv["command"] = command;
  kv["seed"] = std::to_string(seed);
  write_key_values(out, kv);
}

KeyValues merged(const ModelConfig& mc, const TrainConfig& tc) {
  KeyValues kv = mc.to_key_values();
  for (const auto& [k, v] : tc.to_key_values()) kv[k] = v;
  return kv;
}

std::vector<TweetRecord> read_split(const std::string& path) { return read_jsonl_file(path); }

struct TrainingData {
  Vocabularies vocabs;
  ModelConfig config;
  std::vector<EncodedExample> train, dev, test;
};

TrainingData load_training(const std::string& train_path, const std::string& dev_path,
                           const std::string& test_path, ModelConfig mc, std::size_t min_count) {
  TrainingData d;
  const auto train = filter_training(read_split(train_path));
  if (train.empty()) throw CliError(train_path + ": no usable training records");
  d.vocabs = build_vocabularies(train, min_count);
  mc.set_vocab_sizes(d.vocabs);
  d.config = mc;
  d.train = encode_all(train, d.vocabs, mc.encoder());
  d.dev = encode_all(read_split(dev_path), d.vocabs, mc.encoder());
  if (!test_path.empty()) d.test = encode_all(read_split(test_path), d.vocabs, mc.encoder());
  return d;
}

std::uint64_t checkpoint_seed(const Checkpoint& c) {
  const auto it = c.metadata.find("seed");
  return it == c.metadata.end() ? 0 : kv_u64("seed", it->second);
}

std::vector<EncodedExample> encode_with(const Checkpoint& c, const std::vector<TweetRecord>& records) {
  return encode_all(records, c.vocabs, c.config.encoder());
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_synth(const SyntheticConfig& sc, const std::string& out_dir) {
  const auto dir = prepare_dir(out_dir);
  const auto corpus = generate_synthetic(sc);
  for (const auto& [name, split] : {std::pair{"train", &corpus.train}, {"dev", &corpus.dev}, {"test", &corpus.test}}) {
    auto out = open_out(dir / (std::string(name) + ".jsonl"));
    write_jsonl(out, *split);
  }
  write_run_config(dir, "synth", sc.seed,
                   {{"cities", std::to_string(sc.cities)},
                    {"train", std::to_string(sc.train)},
                    {"dev", std::to_string(sc.dev)},
                    {"test", std::to_string(sc.test)},
                    {"mode", sc.mode == SyntheticMode::Mixed ? "mixed" : "location-only"}});
  std::cerr << "wrote " << corpus.train.size() << '/' << corpus.dev.size() << '/' << corpus.test.size()
            << " records to " << dir.string() << '\n';
}

void cmd_train(const Settings& s, const std::string& train_path, const std::string& dev_path,
               const std::string& test_path, const std::string& out_dir, bool quiet) {
  auto [mc, tc] = s.resolve();
  const auto data = load_training(train_path, dev_path, test_path, mc, s.min_char_count);
  const auto dir = prepare_dir(out_dir);
  TrainHooks hooks;
  if (!quiet) {
    hooks.on_epoch = [](const EpochRecord& e) {
      std::fprintf(stderr, "epoch %zu  loss %.5f  dev %.4f%s\n", e.epoch, e.train_loss, e.dev_accuracy,
                   e.reverted ? "  (reverted)" : "");
    };
  }
  const auto trained = train(data.config, data.train, data.dev, data.test, tc, hooks);
  save_checkpoint((dir / "model.ckpt").string(), *trained.model, data.vocabs,
                  {{"seed", std::to_string(tc.seed)}, {"format_version", std::to_string(kCliFormatVersion)}});
  {
    auto out = open_out(dir / "train_report.tsv");
    write_report_tsv(out, trained.report);
  }
  {
    auto out = open_out(dir / "train_summary.json");
    out << report_summary(trained.report).dump(2) << '\n';
  }
  write_run_config(dir, "train", tc.seed, merged(data.config, tc));
  if (trained.report.test_accuracy) std::printf("test_accuracy\t%.6f\n", *trained.report.test_accuracy);
  std::printf("dev_accuracy\t%.6f\n", trained.report.epochs.back().accepted_dev_accuracy);
}

void cmd_eval(const std::string& ckpt_path, const std::string& data_path) {
  const auto c = load_checkpoint(ckpt_path);
  const auto examples = encode_with(c, read_split(data_path));
  std::printf("accuracy\t%s\t%zu\n", format_real(evaluate_accuracy(*c.model, examples)).c_str(), examples.size());
}

void cmd_ablate(const Settings& s, const std::string& train_path, const std::string& dev_path,
                const std::string& test_path, const std::vector<std::string>& remove_names,
                const std::string& out_dir) {
  auto [mc, tc] = s.resolve();
  const auto data = load_training(train_path, dev_path, test_path, mc, s.min_char_count);
  std::vector<Feature> remove;
  for (const auto& n : remove_names) remove.push_back(parse_feature(n));
  const auto dir = prepare_dir(out_dir);
  const auto rows = ablate(data.config, data.train, data.dev, data.test, tc, remove, [](const AblationRow& r) {
    std::fprintf(stderr, "%-14s %.4f\n", r.removed ? ("-" + feature_name(*r.removed)).c_str() : "all", r.accuracy);
  });
  auto out = open_out(dir / "ablation.tsv");
  write_ablation_tsv(out, rows, tc.seed);
  write_run_config(dir, "ablate", tc.seed, merged(data.config, tc));
}

void cmd_attn(const std::string& ckpt_path, const std::string& data_path, std::size_t top_k,
              std::size_t limit, const std::string& out_dir) {
  const auto c = load_checkpoint(ckpt_path);
  if (!c.model->text()) throw CliError("attn: the model has no text feature");
  auto records = read_split(data_path);
  if (limit && records.size() > limit) records.resize(limit);
  const auto examples = encode_with(c, records);
  const auto dir = prepare_dir(out_dir);
  auto out = open_out(dir / "attention.tsv");
  out << "#geonet-attention v" << kCliFormatVersion << " seed=" << checkpoint_seed(c) << '\n';
  out << "example\trank\tstart\tspan\tweight\n";
  for_each_chunk(examples, 256, [&](const Batch& b, std::span<const std::size_t> idx) {
    const auto result = c.model->evaluate(b);
    const std::size_t spans = result.attention.shape()[1];
    const auto weights = result.attention.values();
    for (std::size_t i = 0; i < b.size(); ++i) {
      auto text = utf8_decode(records[idx[i]].text);
      if (text.size() > c.config.text_max_len) text.resize(c.config.text_max_len);
      const auto top = top_attended_spans(weights.subspan(i * spans, spans), text, c.config.text_window, top_k);
      write_attention_rows(out, idx[i], top);
    }
  });
  write_run_config(dir, "attn", checkpoint_seed(c), {{"top_k", std::to_string(top_k)}});
}

void cmd_time_profile(const std::string& ckpt_path, const std::string& data_path, const std::string& feature,
                      const std::string& out_dir) {
  const auto c = load_checkpoint(ckpt_path);
  const RbfNetwork* rbf = nullptr;
  double EncodedExample::*field = nullptr;
  if (feature == "tweet-time") {
    rbf = c.model->tweet_time();
    field = &EncodedExample::tweet_time;
  } else if (feature == "utc-offset") {
    rbf = c.model->utc_offset();
    field = &EncodedExample::utc_offset;
  } else if (feature == "account-time") {
    rbf = c.model->account_time();
    field = &EncodedExample::account_time;
  }
  if (!rbf) throw CliError("time-profile: the model has no '" + feature + "' feature");
  const auto examples = encode_with(c, read_split(data_path));
  std::set<std::int32_t> present;
  for (const auto& e : examples) present.insert(e.label_id);
  const auto dir = prepare_dir(out_dir);
  auto out = open_out(dir / ("time_profile_" + feature + ".csv"));
  write_profile_header(out);
  for (std::int32_t city : present) {
    write_profile_rows(out, c.vocabs.cities.name(city), bin_weight_profile(*rbf, examples, city, field));
  }
  write_run_config(dir, "time-profile", checkpoint_seed(c), {{"feature", feature}});
}

void cmd_hash(const std::string& ckpt_path, const std::string& data_path, const std::string& out_path) {
  const auto c = load_checkpoint(ckpt_path);
  const auto examples = encode_with(c, read_split(data_path));
  const CodeFile file{c.config.penultimate_dim, checkpoint_seed(c), model_codes(*c.model, examples)};
  save_codes(out_path, file);
  const fs::path parent = fs::path(out_path).parent_path();
  write_run_config(parent.empty() ? fs::path(".") : parent, "hash", file.seed,
                   {{"codes", fs::path(out_path).filename().string()}, {"width", std::to_string(file.width)}});
}

void cmd_retrieve(const std::string& index_path, const std::string& query_path, const std::string& out_dir) {
  const auto index = load_codes(index_path);
  const auto queries = load_codes(query_path);
  if (index.width != queries.width) {
    throw CliError("retrieve: code widths differ (" + std::to_string(index.width) + " vs " +
                   std::to_string(queries.width) + ")");
  }
  const auto rep = map_eval(queries.codes, index.codes);
  const auto dir = prepare_dir(out_dir);
  auto out = open_out(dir / "map.tsv");
  write_map_report(out, rep, index.width, queries.seed);
  write_run_config(dir, "retrieve", queries.seed, {{"index", index_path}, {"queries", query_path}});
  std::printf("map\t%.6f\tevaluated\t%zu\texcluded\t%zu\n", rep.map, rep.evaluated, rep.excluded);
}

void cmd_lsh(const std::string& train_path, const std::string& data_path, std::size_t bits, std::uint64_t seed,
             std::size_t min_count, const std::string& out_path) {
  const auto train = filter_training(read_split(train_path));
  const auto vocabs = build_vocabularies(train, min_count);
  const ModelConfig mc;
  const auto examples = encode_all(read_split(data_path), vocabs, mc.encoder());
  Rng rng(seed);
  const std::size_t dim = 2 * vocabs.chars.size() + 3 + vocabs.timezones.size();
  const LshModel lsh(bits, dim, rng);
  save_codes(out_path, {bits, seed, lsh_codes(lsh, examples, vocabs.chars.size(), vocabs.timezones.size())});
  const fs::path parent = fs::path(out_path).parent_path();
  write_run_config(parent.empty() ? fs::path(".") : parent, "lsh", seed,
                   {{"codes", fs::path(out_path).filename().string()}, {"bits", std::to_string(bits)},
                    {"input_dim", std::to_string(dim)}});
}

void cmd_hist(const std::string& ckpt_path, const std::string& data_path, std::size_t bins,
              const std::string& out_dir) {
  const auto c = load_checkpoint(ckpt_path);
  const auto examples = encode_with(c, read_split(data_path));
  const auto h = r_histogram(*c.model, examples, bins);
  const auto dir = prepare_dir(out_dir);
  auto out = open_out(dir / "r_histogram.tsv");
  write_histogram(out, h, checkpoint_seed(c));
  write_run_config(dir, "hist", checkpoint_seed(c), {{"bins", std::to_string(bins)}});
  std::printf("extreme_mass\t%.6f\n", h.extreme_mass());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tweet geolocation: training, analysis and binary hashing"};
  app.require_subcommand(1);

  Settings settings;
  std::string train_path, dev_path, test_path, data_path, ckpt_path, out_dir = ".", out_path;
  bool quiet = false;

  SyntheticConfig sc;
  std::string mode = "mixed";
  auto* synth = app.add_subcommand("synth", "generate a labelled synthetic corpus");
  synth->add_option("--cities", sc.cities);
  synth->add_option("--train-size", sc.train);
  synth->add_option("--dev-size", sc.dev);
  synth->add_option("--test-size", sc.test);
  synth->add_option("--seed", sc.seed);
  synth->add_option("--mode", mode)->check(CLI::IsMember({"mixed", "location-only"}));
  synth->add_option("--out-dir", out_dir);

  auto* train_cmd = app.add_subcommand("train", "train a model and save a checkpoint");
  train_cmd->add_option("--train", train_path)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--dev", dev_path)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--test", test_path)->check(CLI::ExistingFile);
  train_cmd->add_option("--out-dir", out_dir);
  train_cmd->add_flag("--quiet", quiet, "no per-epoch progress");
  settings.add_to(train_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "classification accuracy of a checkpoint");
  eval_cmd->add_option("--checkpoint", ckpt_path)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", data_path)->required()->check(CLI::ExistingFile);

  std::vector<std::string> remove;
  auto* ablate_cmd = app.add_subcommand("ablate", "retrain without each feature in turn");
  ablate_cmd->add_option("--train", train_path)->required()->check(CLI::ExistingFile);
  ablate_cmd->add_option("--dev", dev_path)->required()->check(CLI::ExistingFile);
  ablate_cmd->add_option("--test", test_path)->check(CLI::ExistingFile);
  ablate_cmd->add_option("--remove", remove, "features to remove (default: all)")->delimiter(',');
  ablate_cmd->add_option("--out-dir", out_dir);
  settings.add_to(ablate_cmd);

  std::size_t top_k = 3, limit = 0;
  auto* attn = app.add_subcommand("attn", "highest-weighted text spans per tweet");
  attn->add_option("--checkpoint", ckpt_path)->required()->check(CLI::ExistingFile);
  attn->add_option("--data", data_path)->required()->check(CLI::ExistingFile);
  attn->add_option("--top-k", top_k);
  attn->add_option("--limit", limit, "only the first N tweets");
  attn->add_option("--out-dir", out_dir);

  std::string feature = "tweet-time";
  auto* profile = app.add_subcommand("time-profile", "mean RBF bin weights per city");
  profile->add_option("--checkpoint", ckpt_path)->required()->check(CLI::ExistingFile);
  profile->add_option("--data", data_path)->required()->check(CLI::ExistingFile);
  profile->add_option("--feature", feature)->check(CLI::IsMember({"tweet-time", "utc-offset", "account-time"}));
  profile->add_option("--out-dir", out_dir);

  auto* hash = app.add_subcommand("hash", "sign-binarised penultimate codes");
  hash->add_option("--checkpoint", ckpt_path)->required()->check(CLI::ExistingFile);
  hash->add_option("--data", data_path)->required()->check(CLI::ExistingFile);
  hash->add_option("--out", out_path)->required();

  std::string index_path, query_path;
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Hamming retrieval MAP of query codes against an index");
  retrieve_cmd->add_option("--index", index_path)->required()->check(CLI::ExistingFile);
  retrieve_cmd->add_option("--queries", query_path)->required()->check(CLI::ExistingFile);
  retrieve_cmd->add_option("--out-dir", out_dir);

  std::size_t bits = 100, min_count = kDefaultMinCharCount;
  std::uint64_t lsh_seed = 1;
  auto* lsh = app.add_subcommand("lsh", "random-hyperplane codes over raw input features");
  lsh->add_option("--train", train_path, "corpus defining the character and timezone vocabularies")
      ->required()
      ->check(CLI::ExistingFile);
  lsh->add_option("--data", data_path)->required()->check(CLI::ExistingFile);
  lsh->add_option("--bits", bits);
  lsh->add_option("--seed", lsh_seed);
  lsh->add_option("--min-char-count", min_count);
  lsh->add_option("--out", out_path)->required();

  std::size_t bins = 20;
  auto* hist = app.add_subcommand("hist", "histogram of penultimate values");
  hist->add_option("--checkpoint", ckpt_path)->required()->check(CLI::ExistingFile);
  hist->add_option("--data", data_path)->required()->check(CLI::ExistingFile);
  hist->add_option("--bins", bins);
  hist->add_option("--out-dir", out_dir);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      sc.mode = mode == "mixed" ? SyntheticMode::Mixed : SyntheticMode::LocationOnly;
      cmd_synth(sc, out_dir);
    } else if (*train_cmd) {
      cmd_train(settings, train_path, dev_path, test_path, out_dir, quiet);
    } else if (*eval_cmd) {
      cmd_eval(ckpt_path, data_path);
    } else if (*ablate_cmd) {
      cmd_ablate(settings, train_path, dev_path, test_path, remove, out_dir);
    } else if (*attn) {
      cmd_attn(ckpt_path, data_path, top_k, limit, out_dir);
    } else if (*profile) {
      cmd_time_profile(ckpt_path, data_path, feature, out_dir);
    } else if (*hash) {
      cmd_hash(ckpt_path, data_path, out_path);
    } else if (*retrieve_cmd) {
      cmd_retrieve(index_path, query_path, out_dir);
    } else if (*lsh) {
      cmd_lsh(train_path, data_path, bits, lsh_seed, min_count, out_path);
    } else if (*hist) {
      cmd_hist(ckpt_path, data_path, bins, out_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "geonet: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
