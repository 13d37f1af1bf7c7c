#pragma once

#include <algorithm>
#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "geonet/corpus.hpp"
#include "geonet/params.hpp"
#include "geonet/sequence.hpp"
#include "geonet/tensor.hpp"

namespace geonet {

/// Single-layer LSTM without peep-holes. Gate blocks are laid out
/// [input | forget | cell | output] along the 4H axis.
struct LstmParams {
  Tensor w_input;   // [E, 4H]
  Tensor w_hidden;  // [H, 4H]
  Tensor bias;      // [4H]

  std::size_t hidden() const { return w_hidden.dim(0); }

  static LstmParams init(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
    LstmParams p;
    p.w_input = init::xavier(input_dim, hidden_dim, {input_dim, 4 * hidden_dim}, rng);
    p.w_hidden = init::xavier(hidden_dim, hidden_dim, {hidden_dim, 4 * hidden_dim}, rng);
    p.bias = Tensor::zeros({4 * hidden_dim}, true);
    // Forget biases start at 1.0.
    auto b = p.bias.values();
    std::fill(b.begin() + static_cast<std::ptrdiff_t>(hidden_dim),
              b.begin() + static_cast<std::ptrdiff_t>(2 * hidden_dim), 1.0);
    return p;
  }
};

/// Runs the recurrence over `xs` (each [B,E]) from zero initial state.
/// Returns hidden states indexed by position, whichever the direction.
inline std::vector<Tensor> lstm_sequence(const std::vector<Tensor>& xs, const LstmParams& p,
                                         bool reverse) {
  const std::size_t steps = xs.size();
  const std::size_t h = p.hidden();
  std::vector<Tensor> states(steps);
  Tensor hidden, cell;
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = reverse ? steps - 1 - k : k;
    Tensor gates = add(matmul(xs[t], p.w_input), p.bias);
    if (hidden.defined()) gates = add(gates, matmul(hidden, p.w_hidden));
    Tensor in_gate = sigmoid(slice_last(gates, 0, h));
    Tensor forget_gate = sigmoid(slice_last(gates, h, 2 * h));
    Tensor candidate = tanh(slice_last(gates, 2 * h, 3 * h));
    Tensor out_gate = sigmoid(slice_last(gates, 3 * h, 4 * h));
    cell = cell.defined() ? add(mul(forget_gate, cell), mul(in_gate, candidate))
                          : mul(in_gate, candidate);
    hidden = mul(out_gate, tanh(cell));
    states[t] = hidden;
  }
  return states;
}

struct BiLstmStates {
  std::vector<Tensor> forward;   // h^f_t
  std::vector<Tensor> backward;  // h^b_t
};

inline BiLstmStates bilstm_contexts(const std::vector<Tensor>& xs, const LstmParams& forward,
                                    const LstmParams& backward) {
  if (xs.empty()) throw std::invalid_argument("bilstm_contexts: empty sequence");
  return {lstm_sequence(xs, forward, false), lstm_sequence(xs, backward, true)};
}

/// g_t = ReLU(W_g [h^f_{t-1} ; x_t ; h^b_{t+1}] + b_g), with zero context
/// beyond either end of the sequence.
inline std::vector<Tensor> contextual_projection(const std::vector<Tensor>& xs,
                                                 const BiLstmStates& ctx, const Tensor& w_g,
                                                 const Tensor& b_g) {
  const std::size_t steps = xs.size();
  if (steps == 0) return {};
  const std::size_t batch = xs.front().dim(0);
  const Tensor left_edge = Tensor::zeros({batch, ctx.forward.front().dim(1)});
  const Tensor right_edge = Tensor::zeros({batch, ctx.backward.front().dim(1)});
  std::vector<Tensor> gs;
  gs.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const Tensor& left = t == 0 ? left_edge : ctx.forward[t - 1];
    const Tensor& right = t + 1 == steps ? right_edge : ctx.backward[t + 1];
    gs.push_back(relu(linear(concat({left, xs[t], right}, 1), w_g, b_g)));
  }
  return gs;
}

/// Narrow max-over-time pooling: span t is the elementwise max of
/// g_t..g_{t+P-1}, giving T-P+1 spans.
inline std::vector<Tensor> windowed_max_pool(const std::vector<Tensor>& gs, std::size_t window) {
  if (window < 1 || window > gs.size()) {
    throw std::invalid_argument("windowed_max_pool: window " + std::to_string(window) +
                                " invalid for sequence of length " + std::to_string(gs.size()));
  }
  std::vector<Tensor> spans;
  spans.reserve(gs.size() - window + 1);
  for (std::size_t t = 0; t + window <= gs.size(); ++t) {
    if (window == 1) {
      spans.push_back(gs[t]);
    } else {
      spans.push_back(max_of(std::vector<Tensor>(gs.begin() + static_cast<std::ptrdiff_t>(t),
                                                 gs.begin() + static_cast<std::ptrdiff_t>(t + window))));
    }
  }
  return spans;
}

struct AttentionOutput {
  Tensor features;  // [B,O]
  Tensor weights;   // [B,S], rows sum to one
};

/// alpha_t = v . tanh(W_v g_t); a = softmax(alpha); f = sum_t a_t g_t.
inline AttentionOutput attention_pool(const std::vector<Tensor>& spans, const Tensor& w_v,
                                      const Tensor& v) {
  if (spans.empty()) throw std::invalid_argument("attention_pool: no spans");
  std::vector<Tensor> scores;
  scores.reserve(spans.size());
  for (const Tensor& span : spans) scores.push_back(matmul(tanh(matmul(span, w_v)), v));
  Tensor weights = softmax(concat(scores, 1));
  std::vector<Tensor> weighted;
  weighted.reserve(spans.size());
  for (std::size_t t = 0; t < spans.size(); ++t) {
    weighted.push_back(mul(slice_last(weights, t, t + 1), spans[t]));
  }
  return {add_n(weighted), weights};
}

struct TextNetConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 200;      // E
  std::size_t hidden_dim = 0;       // H; 0 means E
  std::size_t proj_dim = 600;       // O
  std::size_t window = 10;          // P
  std::size_t attention_dim = 0;    // V_a; 0 means O

  std::size_t hidden() const { return hidden_dim ? hidden_dim : embed_dim; }
  std::size_t attention() const { return attention_dim ? attention_dim : proj_dim; }
};

/// Character-level recurrent convolutional encoder with windowed pooling and
/// self-attention.
class TextNetwork {
 public:
  TextNetwork(const TextNetConfig& config, Rng& rng) : config_(config) {
    if (config.vocab_size == 0) throw std::invalid_argument("text network: empty vocabulary");
    if (config.window < 1) throw std::invalid_argument("text network: window must be >= 1");
    const std::size_t e = config.embed_dim, h = config.hidden(), o = config.proj_dim,
                      va = config.attention();
    embeddings_ = init::uniform({config.vocab_size, e}, 0.1, rng);
    forward_ = LstmParams::init(e, h, rng);
    backward_ = LstmParams::init(e, h, rng);
    w_g_ = init::xavier(2 * h + e, o, {2 * h + e, o}, rng);
    b_g_ = Tensor::zeros({o}, true);
    w_v_ = init::xavier(o, va, {o, va}, rng);
    v_ = init::xavier(va, 1, {va, 1}, rng);
  }

  void register_params(ParamSet& params, const std::string& prefix) {
    params.add(prefix + "embeddings", embeddings_);
    params.add(prefix + "lstm_fw.w_input", forward_.w_input);
    params.add(prefix + "lstm_fw.w_hidden", forward_.w_hidden);
    params.add(prefix + "lstm_fw.bias", forward_.bias);
    params.add(prefix + "lstm_bw.w_input", backward_.w_input);
    params.add(prefix + "lstm_bw.w_hidden", backward_.w_hidden);
    params.add(prefix + "lstm_bw.bias", backward_.bias);
    params.add(prefix + "w_g", w_g_);
    params.add(prefix + "b_g", b_g_);
    params.add(prefix + "attn.w_v", w_v_);
    params.add(prefix + "attn.v", v_);
  }

  std::size_t output_dim() const { return config_.proj_dim; }
  const TextNetConfig& config() const { return config_; }

  AttentionOutput forward(const IdMatrix& ids) const {
    if (ids.cols < config_.window) {
      throw std::invalid_argument("text network: sequence length " + std::to_string(ids.cols) +
                                  " shorter than window " + std::to_string(config_.window));
    }
    const auto xs = embed_positions(embeddings_, ids);
    const auto ctx = bilstm_contexts(xs, forward_, backward_);
    const auto gs = contextual_projection(xs, ctx, w_g_, b_g_);
    return attention_pool(windowed_max_pool(gs, config_.window), w_v_, v_);
  }

  const Tensor& embeddings() const { return embeddings_; }
  const LstmParams& forward_lstm() const { return forward_; }
  const LstmParams& backward_lstm() const { return backward_; }
  const Tensor& w_g() const { return w_g_; }
  const Tensor& b_g() const { return b_g_; }
  const Tensor& w_v() const { return w_v_; }
  const Tensor& v() const { return v_; }

 private:
  TextNetConfig config_;
  Tensor embeddings_;
  LstmParams forward_, backward_;
  Tensor w_g_, b_g_, w_v_, v_;
};

// ---------------------------------------------------------------------------
// Attention report

struct AttendedSpan {
  std::size_t start = 0;
  std::u32string text;  // raw characters [start, start+P), clipped to the tweet
  double weight = 0.0;
};

/// The k highest-weighted spans, descending by weight (ties by start).
inline std::vector<AttendedSpan> top_attended_spans(std::span<const double> weights,
                                                    std::u32string_view raw_text,
                                                    std::size_t window, std::size_t k) {
  std::vector<std::size_t> order(weights.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
  std::vector<AttendedSpan> out;
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) {
    const std::size_t s = order[i];
    AttendedSpan span;
    span.start = s;
    span.weight = weights[s];
    if (s < raw_text.size()) span.text = raw_text.substr(s, window);
    out.push_back(std::move(span));
  }
  return out;
}

/// Tab-separated: example index, rank, start, span (escaped), weight.
inline void write_attention_rows(std::ostream& out, std::size_t example,
                                 const std::vector<AttendedSpan>& spans) {
  for (std::size_t rank = 0; rank < spans.size(); ++rank) {
    const auto& s = spans[rank];
    char weight[32];
    std::snprintf(weight, sizeof weight, "%.6f", s.weight);
    out << example << '\t' << rank + 1 << '\t' << s.start << '\t'
        << detail::escape_symbol(utf8_encode(s.text)) << '\t' << weight << '\n';
  }
}

}  // namespace geonet
