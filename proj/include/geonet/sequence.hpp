#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "geonet/tensor.hpp"

namespace geonet {

/// Row-major batch of fixed-length id sequences, one row per example.
struct IdMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int32_t> ids;

  IdMatrix() = default;
  IdMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), ids(r * c, 0) {}

  static IdMatrix single(const std::vector<std::int32_t>& seq) {
    IdMatrix m(1, seq.size());
    m.ids = seq;
    return m;
  }

  std::int32_t at(std::size_t r, std::size_t c) const { return ids[r * cols + c]; }

  /// Ids at position `t` across the batch.
  std::vector<std::int32_t> column(std::size_t t) const {
    std::vector<std::int32_t> out(rows);
    for (std::size_t r = 0; r < rows; ++r) out[r] = ids[r * cols + t];
    return out;
  }
};

/// x_t for every position t: one [rows, E] embedding per column.
inline std::vector<Tensor> embed_positions(const Tensor& table, const IdMatrix& ids) {
  std::vector<Tensor> xs;
  xs.reserve(ids.cols);
  for (std::size_t t = 0; t < ids.cols; ++t) {
    const auto col = ids.column(t);
    xs.push_back(embedding(table, col));
  }
  return xs;
}

}  // namespace geonet
