#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "geonet/params.hpp"

namespace geonet {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moments and step counter; plain data so it can be snapshotted alongside
/// the parameters.
struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::int64_t step_count = 0;
};

class Adam {
 public:
  Adam(ParamSet& params, AdamConfig config = {}) : params_(&params), config_(config) {
    for (const auto& e : params.entries()) {
      state_.first_moment.emplace_back(e.tensor.size(), 0.0);
      state_.second_moment.emplace_back(e.tensor.size(), 0.0);
    }
  }

  /// Bias-corrected update of every parameter, then zeroes the gradients.
  /// Parameters that never received a gradient are treated as zero-gradient.
  void step() {
    ++state_.step_count;
    const double t = static_cast<double>(state_.step_count);
    const double correction1 = 1.0 - std::pow(config_.beta1, t);
    const double correction2 = 1.0 - std::pow(config_.beta2, t);
    auto& entries = params_->entries();
    for (std::size_t p = 0; p < entries.size(); ++p) {
      Tensor& param = entries[p].tensor;
      auto grad = param.grad();
      if (grad.empty()) continue;
      auto values = param.values();
      auto& m = state_.first_moment[p];
      auto& v = state_.second_moment[p];
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double g = grad[i];
        m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
        v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
        const double m_hat = m[i] / correction1;
        const double v_hat = v[i] / correction2;
        values[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
      }
    }
    params_->zero_grad();
  }

  const AdamState& state() const { return state_; }
  void set_state(AdamState state) { state_ = std::move(state); }
  const AdamConfig& config() const { return config_; }

 private:
  ParamSet* params_;
  AdamConfig config_;
  AdamState state_;
};

}  // namespace geonet
