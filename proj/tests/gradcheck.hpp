#pragma once

// Central finite-difference check of reverse-mode gradients.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "geonet/rng.hpp"
#include "geonet/tensor.hpp"

namespace gradcheck {

struct Options {
  double step = 1e-5;
  double rel_tol = 1e-4;
  // Gradients this small in both estimates count as agreeing.
  double abs_tol = 1e-8;
  // One-sided slopes further apart than this mark a non-differentiable point.
  double kink_tol = 1e-3;
};

struct Result {
  std::size_t checked = 0;
  std::size_t kinks = 0;
  std::size_t failures = 0;
  double worst_rel = 0.0;
  std::string first_failure;

  bool ok() const { return failures == 0 && checked > 0; }
};

/// `loss` must rebuild the graph from `inputs` on each call and return a
/// scalar. Inputs are perturbed in place and restored.
inline Result check(const std::function<geonet::Tensor()>& loss, std::vector<geonet::Tensor> inputs,
                    const Options& opt = {}) {
  for (auto& t : inputs) t.zero_grad();
  const geonet::Tensor out = loss();
  out.backward();
  const double f0 = out.item();

  Result res;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto values = inputs[k].values();
    const std::vector<double> analytic(inputs[k].grad().begin(), inputs[k].grad().end());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + opt.step;
      const double fp = loss().item();
      values[i] = saved - opt.step;
      const double fm = loss().item();
      values[i] = saved;

      const double right = (fp - f0) / opt.step;
      const double left = (f0 - fm) / opt.step;
      const double numeric = (fp - fm) / (2.0 * opt.step);
      if (std::abs(right - left) > opt.kink_tol * (1.0 + std::abs(numeric))) {
        ++res.kinks;
        continue;
      }
      ++res.checked;
      const double a = analytic.empty() ? 0.0 : analytic[i];
      const double diff = std::abs(a - numeric);
      const double scale = std::max(std::abs(a), std::abs(numeric));
      const double rel = scale > 0.0 ? diff / scale : 0.0;
      if (diff > opt.abs_tol) res.worst_rel = std::max(res.worst_rel, rel);
      if (diff > opt.abs_tol && rel > opt.rel_tol) {
        if (res.failures++ == 0) {
          res.first_failure = "input " + std::to_string(k) + "[" + std::to_string(i) +
                              "]: analytic " + std::to_string(a) + " numeric " + std::to_string(numeric);
        }
      }
    }
  }
  return res;
}

inline geonet::Tensor random_tensor(geonet::Shape shape, geonet::Rng& rng, double scale = 1.0) {
  std::vector<double> v(geonet::shape_size(shape));
  for (double& x : v) x = rng.normal(0.0, scale);
  return geonet::Tensor(std::move(shape), std::move(v), true);
}

/// Weighted sum with fixed random weights: a scalar loss whose gradient
/// reaches every element of `t` with a distinct coefficient.
inline geonet::Tensor probe(const geonet::Tensor& t, std::uint64_t seed) {
  geonet::Rng rng(seed);
  std::vector<double> w(t.size());
  for (double& x : w) x = rng.uniform(-1.0, 1.0);
  return geonet::sum(geonet::mul(t, geonet::Tensor(t.shape(), std::move(w))));
}

}  // namespace gradcheck
