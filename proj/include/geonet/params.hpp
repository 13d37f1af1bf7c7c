#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "geonet/rng.hpp"
#include "geonet/tensor.hpp"

namespace geonet {

/// Ordered collection of named trainable tensors. Registration order is the
/// serialization and optimizer order.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
  };

  Tensor& add(std::string name, Tensor tensor) {
    if (contains(name)) throw std::invalid_argument("duplicate parameter " + name);
    entries_.push_back({std::move(name), std::move(tensor)});
    return entries_.back().tensor;
  }

  bool contains(const std::string& name) const {
    for (const Entry& e : entries_) {
      if (e.name == name) return true;
    }
    return false;
  }

  const Tensor& get(const std::string& name) const {
    for (const Entry& e : entries_) {
      if (e.name == name) return e.tensor;
    }
    throw std::out_of_range("no parameter named " + name);
  }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const Entry& e : entries_) n += e.tensor.size();
    return n;
  }

  void zero_grad() {
    for (Entry& e : entries_) e.tensor.zero_grad();
  }

  /// Deep copy of every parameter's values.
  std::vector<std::vector<double>> snapshot() const {
    std::vector<std::vector<double>> out;
    out.reserve(entries_.size());
    for (const Entry& e : entries_) {
      out.emplace_back(e.tensor.values().begin(), e.tensor.values().end());
    }
    return out;
  }

  void restore(const std::vector<std::vector<double>>& values) {
    if (values.size() != entries_.size()) {
      throw std::invalid_argument("snapshot has " + std::to_string(values.size()) +
                                  " tensors, expected " +
                                  std::to_string(entries_.size()));
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      auto dst = entries_[i].tensor.values();
      if (values[i].size() != dst.size()) {
        throw ShapeError("snapshot size mismatch for " + entries_[i].name);
      }
      std::copy(values[i].begin(), values[i].end(), dst.begin());
    }
  }

 private:
  std::vector<Entry> entries_;
};

namespace init {

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
inline Tensor xavier(std::size_t fan_in, std::size_t fan_out, Shape shape, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  const std::size_t n = shape_size(shape);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-bound, bound);
  return Tensor(std::move(shape), std::move(v), true);
}

inline Tensor uniform(Shape shape, double bound, Rng& rng) {
  const std::size_t n = shape_size(shape);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-bound, bound);
  return Tensor(std::move(shape), std::move(v), true);
}

}  // namespace init

}  // namespace geonet
