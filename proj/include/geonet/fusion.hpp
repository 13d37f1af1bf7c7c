#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "geonet/params.hpp"
#include "geonet/rng.hpp"
#include "geonet/tensor.hpp"

namespace geonet {

/// Noise and extrema-loss settings; both zero for plain classification.
struct HashTrainConfig {
  double noise_sigma = 0.0;    // corruption level
  double extrema_alpha = 0.0;  // extrema loss scale

  static HashTrainConfig hashing_defaults() { return {0.1, 0.1}; }
};

/// Concatenates feature vectors, then (train only) adds Gaussian noise and
/// applies dropout, in that order.
inline Tensor fuse(const std::vector<Tensor>& features, double noise_sigma, double keep_prob,
                   Rng& rng, bool train) {
  if (features.empty()) throw std::invalid_argument("fuse: no features");
  Tensor joined = features.size() == 1 ? features.front() : concat(features, 1);
  joined = gaussian_noise(joined, noise_sigma, rng, train);
  return dropout(joined, keep_prob, rng, train);
}

/// alpha * mean_i |(r_i - 1)(r_i + 1)|, averaged over the batch as well.
inline Tensor extrema_loss(const Tensor& r, double alpha) {
  return scale(mean(abs(add_scalar(square(r), -1.0))), alpha);
}

/// Penultimate tanh layer and softmax output layer.
class FusionClassifier {
 public:
  FusionClassifier(std::size_t input_dim, std::size_t penultimate_dim, std::size_t classes,
                   Rng& rng) {
    if (input_dim == 0 || penultimate_dim == 0 || classes == 0) {
      throw std::invalid_argument("fusion classifier: zero dimension");
    }
    w_r_ = init::xavier(input_dim, penultimate_dim, {input_dim, penultimate_dim}, rng);
    b_r_ = Tensor::zeros({penultimate_dim}, true);
    w_out_ = init::xavier(penultimate_dim, classes, {penultimate_dim, classes}, rng);
    b_out_ = Tensor::zeros({classes}, true);
  }

  void register_params(ParamSet& params, const std::string& prefix) {
    params.add(prefix + "w_r", w_r_);
    params.add(prefix + "b_r", b_r_);
    params.add(prefix + "w_out", w_out_);
    params.add(prefix + "b_out", b_out_);
  }

  /// r = tanh(W_r f + b_r).
  Tensor penultimate(const Tensor& fused) const { return tanh(linear(fused, w_r_, b_r_)); }

  Tensor logits(const Tensor& r) const { return linear(r, w_out_, b_out_); }
  Tensor classify(const Tensor& r) const { return softmax(logits(r)); }

  std::size_t input_dim() const { return w_r_.dim(0); }
  std::size_t penultimate_dim() const { return w_r_.dim(1); }
  std::size_t classes() const { return w_out_.dim(1); }

  const Tensor& w_r() const { return w_r_; }
  const Tensor& b_r() const { return b_r_; }
  const Tensor& w_out() const { return w_out_; }
  const Tensor& b_out() const { return b_out_; }

 private:
  Tensor w_r_, b_r_, w_out_, b_out_;
};

/// Argmax per row of a [B,K] tensor; ties resolve to the lowest index.
inline std::vector<std::int32_t> argmax_rows(const Tensor& probs) {
  const std::size_t rows = probs.dim(0), cols = probs.dim(1);
  std::vector<std::int32_t> out(rows, 0);
  for (std::size_t b = 0; b < rows; ++b) {
    double best = probs.at(b, 0);
    for (std::size_t k = 1; k < cols; ++k) {
      if (probs.at(b, k) > best) {
        best = probs.at(b, k);
        out[b] = static_cast<std::int32_t>(k);
      }
    }
  }
  return out;
}

}  // namespace geonet
