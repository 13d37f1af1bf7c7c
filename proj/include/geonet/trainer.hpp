#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "geonet/adam.hpp"
#include "geonet/kv_config.hpp"
#include "geonet/model.hpp"

namespace geonet {

inline constexpr int kReportFormatVersion = 1;

struct TrainConfig {
  std::size_t batch_size = 512;
  std::size_t epochs = 10;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  std::size_t eval_batch_size = 256;

  KeyValues to_key_values() const {
    char lr[32];
    std::snprintf(lr, sizeof lr, "%.17g", learning_rate);
    return {{"batch_size", std::to_string(batch_size)},
            {"epochs", std::to_string(epochs)},
            {"learning_rate", lr},
            {"seed", std::to_string(seed)},
            {"eval_batch_size", std::to_string(eval_batch_size)}};
  }

  void apply(const KeyValues& kv) {
    if (auto it = kv.find("batch_size"); it != kv.end()) batch_size = kv_size(it->first, it->second);
    if (auto it = kv.find("epochs"); it != kv.end()) epochs = kv_size(it->first, it->second);
    if (auto it = kv.find("learning_rate"); it != kv.end()) learning_rate = kv_real(it->first, it->second);
    if (auto it = kv.find("seed"); it != kv.end()) seed = kv_u64(it->first, it->second);
    if (auto it = kv.find("eval_batch_size"); it != kv.end()) eval_batch_size = kv_size(it->first, it->second);
  }
};

/// Epoch-revert rule: an epoch whose dev accuracy is below the last accepted
/// accuracy is rejected and the previous snapshot restored.
class EpochGate {
 public:
  /// True when `dev_accuracy` is accepted.
  bool offer(double dev_accuracy) {
    if (accepted_ && dev_accuracy < *accepted_) return false;
    accepted_ = dev_accuracy;
    return true;
  }

  std::optional<double> accepted() const { return accepted_; }

 private:
  std::optional<double> accepted_;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_accuracy = 0.0;
  double accepted_dev_accuracy = 0.0;
  bool reverted = false;
};

struct TrainReport {
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  std::optional<double> test_accuracy;
  std::size_t steps = 0;  // optimizer updates, including reverted epochs
  double wall_clock_seconds = 0.0;

  std::size_t revert_count() const {
    std::size_t n = 0;
    for (const auto& e : epochs) n += e.reverted ? 1 : 0;
    return n;
  }
};

inline std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Per-epoch table. Wall-clock time is deliberately not part of it so that
/// identical runs produce identical files.
inline void write_report_tsv(std::ostream& out, const TrainReport& report) {
  out << "#geonet-train-report v" << kReportFormatVersion << " seed=" << report.seed << '\n';
  out << "epoch\ttrain_loss\tdev_accuracy\taccepted_dev_accuracy\treverted\n";
  for (const auto& e : report.epochs) {
    out << e.epoch << '\t' << format_real(e.train_loss) << '\t' << format_real(e.dev_accuracy)
        << '\t' << format_real(e.accepted_dev_accuracy) << '\t' << (e.reverted ? 1 : 0) << '\n';
  }
  if (report.test_accuracy) out << "#test_accuracy\t" << format_real(*report.test_accuracy) << '\n';
}

inline nlohmann::json report_summary(const TrainReport& report) {
  nlohmann::json j;
  j["format_version"] = kReportFormatVersion;
  j["seed"] = report.seed;
  j["epochs"] = report.epochs.size();
  j["steps"] = report.steps;
  nlohmann::json reverts = nlohmann::json::array();
  nlohmann::json dev = nlohmann::json::array();
  for (const auto& e : report.epochs) {
    if (e.reverted) reverts.push_back(e.epoch);
    dev.push_back(e.dev_accuracy);
  }
  j["revert_epochs"] = reverts;
  j["dev_accuracy"] = dev;
  j["final_dev_accuracy"] = report.epochs.empty() ? 0.0 : report.epochs.back().accepted_dev_accuracy;
  j["test_accuracy"] = report.test_accuracy ? nlohmann::json(*report.test_accuracy) : nlohmann::json();
  return j;
}

/// Fraction of examples whose argmax prediction equals the label.
inline double evaluate_accuracy(const GeoModel& model, std::span<const EncodedExample> examples,
                                std::size_t chunk = 256) {
  if (examples.empty()) throw std::invalid_argument("evaluate_accuracy: no examples");
  std::size_t correct = 0;
  for_each_chunk(examples, chunk, [&](const Batch& b, std::span<const std::size_t>) {
    const auto pred = model.predict(b);
    for (std::size_t i = 0; i < b.size(); ++i) correct += pred[i] == b.labels[i] ? 1 : 0;
  });
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

struct TrainedModel {
  std::unique_ptr<GeoModel> model;
  TrainReport report;
};

struct TrainHooks {
  /// Called after every epoch.
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Minibatch Adam training for exactly `config.epochs` epochs with the
/// epoch-revert rule. All randomness (init, shuffling, dropout, noise) is
/// drawn from one generator seeded with `config.seed`.
inline TrainedModel train(const ModelConfig& model_config, std::span<const EncodedExample> train_set,
                          std::span<const EncodedExample> dev_set,
                          std::span<const EncodedExample> test_set, const TrainConfig& config,
                          const TrainHooks& hooks = {}) {
  if (train_set.empty()) throw std::invalid_argument("train: empty training split");
  if (dev_set.empty()) throw std::invalid_argument("train: empty development split");
  if (config.batch_size == 0) throw std::invalid_argument("train: batch size must be positive");
  const auto started = std::chrono::steady_clock::now();

  Rng rng(config.seed);
  TrainedModel result;
  result.model = std::make_unique<GeoModel>(model_config, rng);
  result.report.seed = config.seed;
  GeoModel& model = *result.model;
  Adam adam(model.params(), AdamConfig{config.learning_rate});

  auto param_snapshot = model.params().snapshot();
  auto adam_snapshot = adam.state();
  EpochGate gate;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const Batch batch = make_batch(train_set, idx);
      const auto out = model.forward(batch, true, rng);
      const Tensor loss = model.loss(out, batch.labels);
      loss.backward();
      adam.step();
      model.after_step();
      loss_total += loss.item();
      ++batches;
      ++result.report.steps;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_total / static_cast<double>(batches);
    record.dev_accuracy = evaluate_accuracy(model, dev_set, config.eval_batch_size);
    if (gate.offer(record.dev_accuracy)) {
      param_snapshot = model.params().snapshot();
      adam_snapshot = adam.state();
    } else {
      model.params().restore(param_snapshot);
      adam.set_state(adam_snapshot);
      record.reverted = true;
    }
    record.accepted_dev_accuracy = *gate.accepted();
    result.report.epochs.push_back(record);
    if (hooks.on_epoch) hooks.on_epoch(record);
  }

  if (!test_set.empty()) {
    result.report.test_accuracy = evaluate_accuracy(model, test_set, config.eval_batch_size);
  }
  result.report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

// ---------------------------------------------------------------------------
// Ablation

struct AblationRow {
  std::optional<Feature> removed;  // nullopt: all features
  double accuracy = 0.0;
  double delta = 0.0;  // accuracy minus the all-features accuracy
};

/// Retrains once per removed feature with the same seed and configuration.
/// Accuracy is measured on the test split when present, else on dev.
inline std::vector<AblationRow> ablate(const ModelConfig& base, std::span<const EncodedExample> train_set,
                                       std::span<const EncodedExample> dev_set,
                                       std::span<const EncodedExample> test_set,
                                       const TrainConfig& config, std::vector<Feature> remove = {},
                                       const std::function<void(const AblationRow&)>& on_row = {}) {
  if (remove.empty()) remove = base.features.list();
  for (Feature f : remove) {
    if (!base.features.has(f)) {
      throw std::invalid_argument("cannot remove feature '" + feature_name(f) +
                                  "': not part of the model");
    }
  }
  auto score = [&](const ModelConfig& cfg) {
    auto trained = train(cfg, train_set, dev_set, test_set, config);
    return trained.report.test_accuracy ? *trained.report.test_accuracy
                                        : trained.report.epochs.back().accepted_dev_accuracy;
  };
  std::vector<AblationRow> rows;
  rows.push_back({std::nullopt, score(base), 0.0});
  if (on_row) on_row(rows.back());
  for (Feature f : remove) {
    ModelConfig cfg = base;
    cfg.features = base.features.without(f);
    if (cfg.features.empty()) throw std::invalid_argument("cannot remove the only feature");
    const double acc = score(cfg);
    rows.push_back({f, acc, acc - rows.front().accuracy});
    if (on_row) on_row(rows.back());
  }
  return rows;
}

inline void write_ablation_tsv(std::ostream& out, const std::vector<AblationRow>& rows,
                               std::uint64_t seed) {
  out << "#geonet-ablation v" << kReportFormatVersion << " seed=" << seed << '\n';
  out << "feature_set\taccuracy\tdelta\n";
  for (const auto& r : rows) {
    out << (r.removed ? "-" + feature_name(*r.removed) : std::string("all")) << '\t'
        << format_real(r.accuracy) << '\t' << format_real(r.delta) << '\n';
  }
}

}  // namespace geonet
