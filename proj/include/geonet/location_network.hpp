#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "geonet/params.hpp"
#include "geonet/sequence.hpp"
#include "geonet/tensor.hpp"

namespace geonet {

/// g_t = ReLU(W_g [x_t ; ... ; x_{t+Q-1}] + b) for every full span.
inline std::vector<Tensor> span_activations(const std::vector<Tensor>& xs, std::size_t span,
                                            const Tensor& w_g, const Tensor& b_g) {
  if (span < 1 || xs.size() < span) {
    throw std::invalid_argument("location conv: sequence length " + std::to_string(xs.size()) +
                                " shorter than span " + std::to_string(span));
  }
  std::vector<Tensor> gs;
  gs.reserve(xs.size() - span + 1);
  for (std::size_t t = 0; t + span <= xs.size(); ++t) {
    std::vector<Tensor> window(xs.begin() + static_cast<std::ptrdiff_t>(t),
                               xs.begin() + static_cast<std::ptrdiff_t>(t + span));
    gs.push_back(relu(linear(span == 1 ? window.front() : concat(window, 1), w_g, b_g)));
  }
  return gs;
}

/// Max over all span activations.
inline Tensor span_max_pool(const std::vector<Tensor>& gs) { return max_of(gs); }

struct LocConvConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 300;  // E
  std::size_t span = 3;         // Q
  std::size_t filters = 300;    // O
};

/// Character convolution over the user location field. Owns its embeddings;
/// nothing is shared with the text network.
class LocationNetwork {
 public:
  LocationNetwork(const LocConvConfig& config, Rng& rng) : config_(config) {
    if (config.vocab_size == 0) throw std::invalid_argument("location network: empty vocabulary");
    if (config.span < 1) throw std::invalid_argument("location network: span must be >= 1");
    const std::size_t in = config.span * config.embed_dim;
    embeddings_ = init::uniform({config.vocab_size, config.embed_dim}, 0.1, rng);
    w_g_ = init::xavier(in, config.filters, {in, config.filters}, rng);
    b_g_ = Tensor::zeros({config.filters}, true);
  }

  void register_params(ParamSet& params, const std::string& prefix) {
    params.add(prefix + "embeddings", embeddings_);
    params.add(prefix + "w_g", w_g_);
    params.add(prefix + "b_g", b_g_);
  }

  std::size_t output_dim() const { return config_.filters; }
  const LocConvConfig& config() const { return config_; }

  Tensor forward(const IdMatrix& ids) const {
    return span_max_pool(span_activations(embed_positions(embeddings_, ids), config_.span, w_g_, b_g_));
  }

  const Tensor& embeddings() const { return embeddings_; }
  const Tensor& w_g() const { return w_g_; }
  const Tensor& b_g() const { return b_g_; }

 private:
  LocConvConfig config_;
  Tensor embeddings_, w_g_, b_g_;
};

/// One learned row per timezone id, including the unknown id.
class TimezoneEmbedding {
 public:
  TimezoneEmbedding(std::size_t count, std::size_t dim, Rng& rng)
      : table_(init::uniform({count, dim}, 0.1, rng)) {
    if (count == 0 || dim == 0) throw std::invalid_argument("timezone embedding: empty table");
  }

  void register_params(ParamSet& params, const std::string& prefix) {
    params.add(prefix + "table", table_);
  }

  std::size_t output_dim() const { return table_.dim(1); }
  std::size_t count() const { return table_.dim(0); }
  const Tensor& table() const { return table_; }

  /// Throws std::out_of_range for ids outside the table.
  Tensor forward(std::span<const std::int32_t> ids) const { return embedding(table_, ids); }

 private:
  Tensor table_;
};

}  // namespace geonet
