#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "geonet/rng.hpp"

namespace geonet {

using Shape = std::vector<std::size_t>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  bool is_leaf() const { return !backward; }

  std::vector<double>& ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

/// Dense row-major double tensor with reverse-mode differentiation.
///
/// A Tensor is a shared handle: copies alias the same storage. Tensors
/// created directly are leaves; tensors produced by ops record their inputs
/// and a backward rule only when at least one input requires gradients.
class Tensor {
 public:
  Tensor() = default;

  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false)
      : node_(std::make_shared<detail::Node>()) {
    if (shape_size(shape) != values.size()) {
      throw ShapeError("tensor of shape " + shape_string(shape) + " given " +
                       std::to_string(values.size()) + " values");
    }
    node_->shape = std::move(shape);
    node_->value = std::move(values);
    node_->requires_grad = requires_grad;
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const std::size_t n = shape_size(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
  }

  static Tensor filled(Shape shape, double v, bool requires_grad = false) {
    const std::size_t n = shape_size(shape);
    return Tensor(std::move(shape), std::vector<double>(n, v), requires_grad);
  }

  static Tensor scalar(double v, bool requires_grad = false) {
    return Tensor({}, {v}, requires_grad);
  }

  bool defined() const { return static_cast<bool>(node_); }

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }

  std::span<double> values() { return node_->value; }
  std::span<const double> values() const { return node_->value; }

  /// Empty span until a backward pass reaches this tensor.
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->ensure_grad(); }

  double item() const {
    if (size() != 1) {
      throw ShapeError("item() on tensor of shape " + shape_string(shape()));
    }
    return node_->value[0];
  }

  double at(std::size_t i) const { return node_->value.at(i); }
  double at(std::size_t row, std::size_t col) const {
    return node_->value.at(row * node_->shape.back() + col);
  }

  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->is_leaf(); }

  void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

  /// Copy of the values without any graph history.
  Tensor detach() const { return Tensor(shape(), node_->value, false); }

  /// Populates grad on every reachable tensor that requires gradients.
  /// Leaf gradients accumulate across calls until zeroed; intermediate
  /// gradients are recomputed on each call.
  void backward() const;

  detail::Node& node() const { return *node_; }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

inline void Tensor::backward() const {
  if (size() != 1) {
    throw ShapeError("backward() requires a scalar loss, got shape " +
                     shape_string(shape()));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (detail::Node* node : order) {
    if (!node->is_leaf()) node->grad.assign(node->value.size(), 0.0);
  }
  node_->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (!(*it)->is_leaf()) (*it)->backward(**it);
  }
}

namespace detail {

/// Wraps a forward result; records parents and the backward rule only if
/// some input participates in differentiation.
inline Tensor make_result(Shape shape, std::vector<double> value,
                          std::vector<Tensor> inputs,
                          std::function<void(Node&)> backward) {
  Tensor out(std::move(shape), std::move(value), false);
  bool needs = false;
  for (const Tensor& t : inputs) needs = needs || t.requires_grad();
  if (needs) {
    Node& n = out.node();
    n.requires_grad = true;
    n.parents.reserve(inputs.size());
    for (Tensor& t : inputs) n.parents.push_back(t.node_ptr());
    n.backward = std::move(backward);
  }
  return out;
}

// Shapes of rank <= 2 viewed as (rows, cols).
inline std::pair<std::size_t, std::size_t> as_matrix(const Shape& s) {
  if (s.empty()) return {1, 1};
  if (s.size() == 1) return {1, s[0]};
  if (s.size() == 2) return {s[0], s[1]};
  throw ShapeError("broadcasting supports rank <= 2, got " + shape_string(s));
}

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

template <typename Fwd, typename Dfa, typename Dfb>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, Fwd fwd,
                 Dfa dfa, Dfb dfb) {
  if (a.shape() == b.shape()) {
    const std::size_t n = a.size();
    std::vector<double> out(n);
    const double* av = a.values().data();
    const double* bv = b.values().data();
    for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[i], bv[i]);
    return make_result(a.shape(), std::move(out), {a, b}, [dfa, dfb](Node& self) {
      Node& pa = *self.parents[0];
      Node& pb = *self.parents[1];
      const std::size_t n = self.value.size();
      if (pa.requires_grad) {
        auto& ga = pa.ensure_grad();
        for (std::size_t i = 0; i < n; ++i) {
          ga[i] += self.grad[i] * dfa(pa.value[i], pb.value[i], self.value[i]);
        }
      }
      if (pb.requires_grad) {
        auto& gb = pb.ensure_grad();
        for (std::size_t i = 0; i < n; ++i) {
          gb[i] += self.grad[i] * dfb(pa.value[i], pb.value[i], self.value[i]);
        }
      }
    });
  }

  const auto [ar, ac] = as_matrix(a.shape());
  const auto [br, bc] = as_matrix(b.shape());
  const bool rows_ok = ar == br || ar == 1 || br == 1;
  const bool cols_ok = ac == bc || ac == 1 || bc == 1;
  if (!rows_ok || !cols_ok) {
    throw ShapeError(std::string(name) + ": cannot broadcast " +
                     shape_string(a.shape()) + " with " +
                     shape_string(b.shape()));
  }
  const std::size_t rows = std::max(ar, br);
  const std::size_t cols = std::max(ac, bc);
  Shape out_shape;
  if (std::max(a.rank(), b.rank()) == 2) {
    out_shape = {rows, cols};
  } else if (std::max(a.rank(), b.rank()) == 1) {
    out_shape = {cols};
  }

  struct Layout {
    std::size_t ar, ac, br, bc, rows, cols;
    std::size_t ia(std::size_t i, std::size_t j) const {
      return (ar == 1 ? 0 : i) * ac + (ac == 1 ? 0 : j);
    }
    std::size_t ib(std::size_t i, std::size_t j) const {
      return (br == 1 ? 0 : i) * bc + (bc == 1 ? 0 : j);
    }
  };
  const Layout lay{ar, ac, br, bc, rows, cols};

  std::vector<double> out(rows * cols);
  const double* av = a.values().data();
  const double* bv = b.values().data();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out[i * cols + j] = fwd(av[lay.ia(i, j)], bv[lay.ib(i, j)]);
    }
  }
  return make_result(std::move(out_shape), std::move(out), {a, b},
                     [lay, dfa, dfb](Node& self) {
                       Node& pa = *self.parents[0];
                       Node& pb = *self.parents[1];
                       if (pa.requires_grad) pa.ensure_grad();
                       if (pb.requires_grad) pb.ensure_grad();
                       for (std::size_t i = 0; i < lay.rows; ++i) {
                         for (std::size_t j = 0; j < lay.cols; ++j) {
                           const std::size_t k = i * lay.cols + j;
                           const std::size_t ka = lay.ia(i, j);
                           const std::size_t kb = lay.ib(i, j);
                           const double x = pa.value[ka];
                           const double y = pb.value[kb];
                           if (pa.requires_grad) {
                             pa.grad[ka] += self.grad[k] * dfa(x, y, self.value[k]);
                           }
                           if (pb.requires_grad) {
                             pb.grad[kb] += self.grad[k] * dfb(x, y, self.value[k]);
                           }
                         }
                       }
                     });
}

// df receives (input, output).
template <typename Fwd, typename Df>
Tensor unary_op(const Tensor& a, Fwd fwd, Df df) {
  const std::size_t n = a.size();
  std::vector<double> out(n);
  const double* av = a.values().data();
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[i]);
  return make_result(a.shape(), std::move(out), {a}, [df](Node& self) {
    Node& p = *self.parents[0];
    auto& g = p.ensure_grad();
    const std::size_t n = self.value.size();
    for (std::size_t i = 0; i < n; ++i) {
      g[i] += self.grad[i] * df(p.value[i], self.value[i]);
    }
  });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic. Binary ops broadcast rank <= 2 operands NumPy-style,
// which covers bias rows over a batch ([B,n] + [n]) and per-example columns
// ([B,1] * [B,n]).

inline Tensor add(const Tensor& a, const Tensor& b) {
  return detail::binary_op(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  return detail::binary_op(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; },
      [](double, double, double) { return -1.0; });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  return detail::binary_op(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; },
      [](double x, double, double) { return x; });
}

inline Tensor div(const Tensor& a, const Tensor& b) {
  return detail::binary_op(
      a, b, "div", [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double x, double y, double) { return -x / (y * y); });
}

inline Tensor scale(const Tensor& a, double c) {
  return detail::unary_op(
      a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

inline Tensor add_scalar(const Tensor& a, double c) {
  return detail::unary_op(
      a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

inline Tensor neg(const Tensor& a) { return scale(a, -1.0); }

inline Tensor square(const Tensor& a) {
  return detail::unary_op(
      a, [](double x) { return x * x; },
      [](double x, double) { return 2.0 * x; });
}

inline Tensor abs(const Tensor& a) {
  return detail::unary_op(
      a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

inline Tensor exp(const Tensor& a) {
  return detail::unary_op(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

inline Tensor tanh(const Tensor& a) {
  return detail::unary_op(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

inline Tensor sigmoid(const Tensor& a) {
  return detail::unary_op(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

inline Tensor relu(const Tensor& a) {
  return detail::unary_op(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------
// Linear algebra and structure.

/// [m,k] x [k,n] -> [m,n].
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_string(a.shape()) +
                     " and " + shape_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n);
  detail::MatrixMap(out.data(), m, n).noalias() =
      detail::ConstMatrixMap(a.values().data(), m, k) *
      detail::ConstMatrixMap(b.values().data(), k, n);
  return detail::make_result({m, n}, std::move(out), {a, b},
                             [m, k, n](detail::Node& self) {
                               detail::Node& pa = *self.parents[0];
                               detail::Node& pb = *self.parents[1];
                               detail::ConstMatrixMap g(self.grad.data(), m, n);
                               if (pa.requires_grad) {
                                 detail::MatrixMap(pa.ensure_grad().data(), m, k)
                                     .noalias() +=
                                     g * detail::ConstMatrixMap(pb.value.data(), k, n)
                                             .transpose();
                               }
                               if (pb.requires_grad) {
                                 detail::MatrixMap(pb.ensure_grad().data(), k, n)
                                     .noalias() +=
                                     detail::ConstMatrixMap(pa.value.data(), m, k)
                                         .transpose() *
                                     g;
                               }
                             });
}

/// x [B,in] times w [in,out] plus bias [out].
inline Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
  return add(matmul(x, w), bias);
}

/// Concatenation along `axis`; all other dimensions must agree.
inline Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) {
    throw ShapeError("concat: axis " + std::to_string(axis) +
                     " out of range for shape " + shape_string(first));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) {
      if (d != axis && s[d] != first[d]) ok = false;
    }
    if (!ok) {
      throw ShapeError("concat: shape " + shape_string(s) +
                       " incompatible with " + shape_string(first) +
                       " along axis " + std::to_string(axis));
    }
    widths.push_back(s[axis] * inner);
    total += s[axis];
  }
  Shape out_shape = first;
  out_shape[axis] = total;
  const std::size_t row = total * inner;
  std::vector<double> out(outer * row);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const double* src = parts[p].values().data();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(src + o * widths[p], widths[p], out.data() + o * row + offset);
    }
    offset += widths[p];
  }
  return detail::make_result(
      std::move(out_shape), std::move(out), parts,
      [widths, outer, row](detail::Node& self) {
        std::size_t offset = 0;
        for (std::size_t p = 0; p < self.parents.size(); ++p) {
          detail::Node& parent = *self.parents[p];
          if (parent.requires_grad) {
            auto& g = parent.ensure_grad();
            for (std::size_t o = 0; o < outer; ++o) {
              for (std::size_t i = 0; i < widths[p]; ++i) {
                g[o * widths[p] + i] += self.grad[o * row + offset + i];
              }
            }
          }
          offset += widths[p];
        }
      });
}

/// Columns [begin, end) of the last axis.
inline Tensor slice_last(const Tensor& x, std::size_t begin, std::size_t end) {
  if (x.rank() == 0 || begin > end || end > x.shape().back()) {
    throw ShapeError("slice_last: range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") invalid for shape " +
                     shape_string(x.shape()));
  }
  const std::size_t width = x.shape().back();
  const std::size_t rows = x.size() / width;
  const std::size_t w = end - begin;
  Shape out_shape = x.shape();
  out_shape.back() = w;
  std::vector<double> out(rows * w);
  const double* src = x.values().data();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(src + r * width + begin, w, out.data() + r * w);
  }
  return detail::make_result(std::move(out_shape), std::move(out), {x},
                             [rows, width, begin, w](detail::Node& self) {
                               auto& g = self.parents[0]->ensure_grad();
                               for (std::size_t r = 0; r < rows; ++r) {
                                 for (std::size_t i = 0; i < w; ++i) {
                                   g[r * width + begin + i] += self.grad[r * w + i];
                                 }
                               }
                             });
}

/// Elementwise maximum across same-shape tensors. Ties go to the earliest
/// input.
inline Tensor max_of(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw ShapeError("max_of: no inputs");
  const Shape& shape = xs.front().shape();
  for (const Tensor& t : xs) {
    if (t.shape() != shape) {
      throw ShapeError("max_of: shape " + shape_string(t.shape()) +
                       " differs from " + shape_string(shape));
    }
  }
  const std::size_t n = xs.front().size();
  std::vector<double> out(xs.front().values().begin(), xs.front().values().end());
  std::vector<std::uint32_t> winner(n, 0);
  for (std::size_t k = 1; k < xs.size(); ++k) {
    const double* v = xs[k].values().data();
    for (std::size_t i = 0; i < n; ++i) {
      if (v[i] > out[i]) {
        out[i] = v[i];
        winner[i] = static_cast<std::uint32_t>(k);
      }
    }
  }
  return detail::make_result(shape, std::move(out), xs,
                             [winner = std::move(winner)](detail::Node& self) {
                               for (std::size_t i = 0; i < winner.size(); ++i) {
                                 detail::Node& p = *self.parents[winner[i]];
                                 if (p.requires_grad) p.ensure_grad()[i] += self.grad[i];
                               }
                             });
}

/// Sum of same-shape tensors.
inline Tensor add_n(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw ShapeError("add_n: no inputs");
  const Shape& shape = xs.front().shape();
  std::vector<double> out(xs.front().size(), 0.0);
  for (const Tensor& t : xs) {
    if (t.shape() != shape) {
      throw ShapeError("add_n: shape " + shape_string(t.shape()) +
                       " differs from " + shape_string(shape));
    }
    const double* v = t.values().data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
  }
  return detail::make_result(shape, std::move(out), xs, [](detail::Node& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      auto& g = p->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

/// Softmax over the last axis.
inline Tensor softmax(const Tensor& x) {
  if (x.rank() == 0) throw ShapeError("softmax: scalar input");
  const std::size_t width = x.shape().back();
  const std::size_t rows = width == 0 ? 0 : x.size() / width;
  std::vector<double> out(x.size());
  const double* v = x.values().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = v + r * width;
    double* dst = out.data() + r * width;
    const double peak = *std::max_element(row, row + width);
    double total = 0.0;
    for (std::size_t i = 0; i < width; ++i) {
      dst[i] = std::exp(row[i] - peak);
      total += dst[i];
    }
    for (std::size_t i = 0; i < width; ++i) dst[i] /= total;
  }
  return detail::make_result(x.shape(), std::move(out), {x},
                             [rows, width](detail::Node& self) {
                               auto& g = self.parents[0]->ensure_grad();
                               for (std::size_t r = 0; r < rows; ++r) {
                                 const double* y = self.value.data() + r * width;
                                 const double* dy = self.grad.data() + r * width;
                                 double dot = 0.0;
                                 for (std::size_t i = 0; i < width; ++i) dot += y[i] * dy[i];
                                 for (std::size_t i = 0; i < width; ++i) {
                                   g[r * width + i] += y[i] * (dy[i] - dot);
                                 }
                               }
                             });
}

/// Rows of `table` [V,E] selected by `ids`, stacked into [n,E].
inline Tensor embedding(const Tensor& table, std::span<const std::int32_t> ids) {
  if (table.rank() != 2) {
    throw ShapeError("embedding: table must be rank 2, got " +
                     shape_string(table.shape()));
  }
  const std::size_t rows = table.dim(0), width = table.dim(1);
  std::vector<double> out(ids.size() * width);
  const double* src = table.values().data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= rows) {
      throw std::out_of_range("embedding: id " + std::to_string(ids[i]) +
                              " outside table of " + std::to_string(rows) +
                              " rows");
    }
    std::copy_n(src + static_cast<std::size_t>(ids[i]) * width, width,
                out.data() + i * width);
  }
  std::vector<std::int32_t> kept(ids.begin(), ids.end());
  return detail::make_result({ids.size(), width}, std::move(out), {table},
                             [kept = std::move(kept), width](detail::Node& self) {
                               auto& g = self.parents[0]->ensure_grad();
                               for (std::size_t i = 0; i < kept.size(); ++i) {
                                 double* dst = g.data() + static_cast<std::size_t>(kept[i]) * width;
                                 const double* src = self.grad.data() + i * width;
                                 for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
                               }
                             });
}

/// Inverted dropout: at train time keeps each unit with probability
/// `keep_prob` and rescales by 1/keep_prob; identity otherwise.
inline Tensor dropout(const Tensor& x, double keep_prob, Rng& rng, bool train) {
  if (keep_prob <= 0.0 || keep_prob > 1.0) {
    throw std::invalid_argument("dropout: keep probability must be in (0, 1]");
  }
  if (!train || keep_prob == 1.0) return x;
  std::vector<double> mask(x.size());
  for (double& m : mask) m = rng.uniform() < keep_prob ? 1.0 / keep_prob : 0.0;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.values()[i] * mask[i];
  return detail::make_result(x.shape(), std::move(out), {x},
                             [mask = std::move(mask)](detail::Node& self) {
                               auto& g = self.parents[0]->ensure_grad();
                               for (std::size_t i = 0; i < mask.size(); ++i) {
                                 g[i] += self.grad[i] * mask[i];
                               }
                             });
}

/// Adds N(0, sigma^2) noise at train time; identity when sigma is zero or at
/// eval time (no draws are consumed in that case).
inline Tensor gaussian_noise(const Tensor& x, double sigma, Rng& rng, bool train) {
  if (sigma < 0.0) throw std::invalid_argument("gaussian_noise: negative sigma");
  if (!train || sigma == 0.0) return x;
  std::vector<double> out(x.values().begin(), x.values().end());
  for (double& v : out) v += sigma * rng.normal();
  return detail::make_result(x.shape(), std::move(out), {x}, [](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

inline Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  return detail::make_result({}, {total}, {x}, [](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (double& gi : g) gi += self.grad[0];
  });
}

inline Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw ShapeError("mean: empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

/// Floor applied to the label probability inside cross_entropy.
inline constexpr double kLogProbFloor = 1e-12;

/// Mean over the batch of -log p[label] for probabilities [B,K].
inline Tensor cross_entropy(const Tensor& probs,
                            std::span<const std::int32_t> labels) {
  if (probs.rank() != 2 || probs.dim(0) != labels.size()) {
    throw ShapeError("cross_entropy: probabilities " + shape_string(probs.shape()) +
                     " with " + std::to_string(labels.size()) + " labels");
  }
  const std::size_t batch = probs.dim(0), classes = probs.dim(1);
  if (batch == 0) throw ShapeError("cross_entropy: empty batch");
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    double row = 0.0;
    for (std::size_t k = 0; k < classes; ++k) row += probs.at(b, k);
    if (std::abs(row - 1.0) > 1e-6) {
      throw std::invalid_argument("cross_entropy: row " + std::to_string(b) +
                                  " sums to " + std::to_string(row));
    }
    if (labels[b] < 0 || static_cast<std::size_t>(labels[b]) >= classes) {
      throw std::out_of_range("cross_entropy: label " + std::to_string(labels[b]) +
                              " outside [0, " + std::to_string(classes) + ")");
    }
    total -= std::log(std::max(probs.at(b, static_cast<std::size_t>(labels[b])),
                               kLogProbFloor));
  }
  std::vector<std::int32_t> kept(labels.begin(), labels.end());
  return detail::make_result(
      {}, {total / static_cast<double>(batch)}, {probs},
      [kept = std::move(kept), classes](detail::Node& self) {
        detail::Node& p = *self.parents[0];
        auto& g = p.ensure_grad();
        const double w = self.grad[0] / static_cast<double>(kept.size());
        for (std::size_t b = 0; b < kept.size(); ++b) {
          const std::size_t k = b * classes + static_cast<std::size_t>(kept[b]);
          if (p.value[k] > kLogProbFloor) g[k] -= w / p.value[k];
        }
      });
}

}  // namespace geonet
