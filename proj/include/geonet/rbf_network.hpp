#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "geonet/corpus.hpp"
#include "geonet/params.hpp"
#include "geonet/tensor.hpp"

namespace geonet {

inline constexpr double kDefaultSigmaFloor = 1e-3;

/// r_i = exp(-(u - mu_i)^2 / (2 sigma_i^2)) for u [N,1], mu and sigma [B].
/// Returns [N,B].
inline Tensor rbf_forward(const Tensor& u, const Tensor& mu, const Tensor& sigma) {
  const Tensor sq_dist = square(sub(u, mu));
  const Tensor two_var = scale(square(sigma), 2.0);
  return exp(neg(div(sq_dist, two_var)));
}

/// Learnable Gaussian bins over a scalar in [0, 1].
class RbfNetwork {
 public:
  RbfNetwork(std::size_t bins, double sigma_floor = kDefaultSigmaFloor)
      : sigma_floor_(sigma_floor) {
    if (bins == 0) throw std::invalid_argument("rbf network needs at least one bin");
    if (sigma_floor <= 0.0) throw std::invalid_argument("sigma floor must be positive");
    std::vector<double> mu(bins), sigma(bins, 1.0 / (2.0 * static_cast<double>(bins)));
    for (std::size_t i = 0; i < bins; ++i) {
      mu[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(bins);
    }
    mu_ = Tensor({bins}, std::move(mu), true);
    sigma_ = Tensor({bins}, std::move(sigma), true);
    clamp_sigma();
  }

  void register_params(ParamSet& params, const std::string& prefix) {
    params.add(prefix + "mu", mu_);
    params.add(prefix + "sigma", sigma_);
  }

  std::size_t bins() const { return mu_.size(); }
  double sigma_floor() const { return sigma_floor_; }
  const Tensor& mu() const { return mu_; }
  const Tensor& sigma() const { return sigma_; }

  /// u holds one scalar per example.
  Tensor forward(std::span<const double> u) const {
    return rbf_forward(Tensor({u.size(), 1}, {u.begin(), u.end()}), mu_, sigma_);
  }

  /// Keeps every width at or above the floor; call after each optimizer step.
  void clamp_sigma() {
    for (double& s : sigma_.values()) s = std::max(s, sigma_floor_);
  }

 private:
  Tensor mu_, sigma_;
  double sigma_floor_;
};

// ---------------------------------------------------------------------------
// Per-city bin weights

/// Bins with a mean weight below this are left out of the plotted profile.
inline constexpr double kBinExclusionThreshold = 0.075;

struct BinWeight {
  std::size_t bin = 0;
  double mu = 0.0;
  double sigma = 0.0;
  double mean_weight = 0.0;
  bool excluded = false;
};

/// Mean RBF activation per bin over the given scalar inputs.
inline std::vector<BinWeight> bin_weight_profile(const RbfNetwork& rbf,
                                                 std::span<const double> inputs) {
  if (inputs.empty()) throw std::invalid_argument("bin_weight_profile: no inputs");
  const Tensor act = rbf.forward(inputs);
  const std::size_t bins = rbf.bins();
  std::vector<BinWeight> out(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    double total = 0.0;
    for (std::size_t n = 0; n < inputs.size(); ++n) total += act.at(n, i);
    out[i].bin = i;
    out[i].mu = rbf.mu().at(i);
    out[i].sigma = rbf.sigma().at(i);
    out[i].mean_weight = total / static_cast<double>(inputs.size());
    out[i].excluded = out[i].mean_weight < kBinExclusionThreshold;
  }
  return out;
}

/// Profile over the examples labelled `city`, reading the scalar selected by
/// `field` (e.g. &EncodedExample::tweet_time).
inline std::vector<BinWeight> bin_weight_profile(const RbfNetwork& rbf,
                                                 std::span<const EncodedExample> examples,
                                                 std::int32_t city,
                                                 double EncodedExample::*field) {
  std::vector<double> inputs;
  for (const auto& e : examples) {
    if (e.label_id == city) inputs.push_back(e.*field);
  }
  if (inputs.empty()) {
    throw std::invalid_argument("bin_weight_profile: no examples for city id " +
                                std::to_string(city));
  }
  return bin_weight_profile(rbf, inputs);
}

inline void write_profile_header(std::ostream& out) {
  out << "city,bin_index,mu,sigma,mean_weight,excluded\n";
}

inline void write_profile_rows(std::ostream& out, const std::string& city,
                               const std::vector<BinWeight>& rows) {
  std::string field = city;
  if (city.find_first_of(",\"\n") != std::string::npos) {
    field = "\"";
    for (char c : city) {
      if (c == '"') field += '"';
      field += c;
    }
    field += '"';
  }
  for (const auto& r : rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%d", r.bin, r.mu, r.sigma, r.mean_weight,
                  r.excluded ? 1 : 0);
    out << field << ',' << buf << '\n';
  }
}

}  // namespace geonet
