#include "xbsim/bnn_core.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "xbsim/error.hpp"

namespace xbsim::bnn {

std::size_t shape_elements(const Shape& shape) {
  if (shape.empty()) return 0;
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, std::size_t b) { return a * b; });
}

BinaryTensor::BinaryTensor(Shape shape, std::vector<std::int8_t> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_elements(shape_) != values_.size()) {
    throw ShapeError("binary tensor: shape holds " + std::to_string(shape_elements(shape_)) +
                     " elements but " + std::to_string(values_.size()) + " were given");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] != 1 && values_[i] != -1) {
      throw DomainError("binary tensor: element " + std::to_string(i) + " is " +
                        std::to_string(values_[i]) + ", expected -1 or +1");
    }
  }
}

BinaryTensor BinaryTensor::filled(Shape shape, std::int8_t value) {
  const auto count = shape_elements(shape);
  return BinaryTensor(std::move(shape), std::vector<std::int8_t>(count, value));
}

std::size_t BinaryTensor::rows() const {
  if (shape_.size() != 2) throw ShapeError("binary tensor: rank-2 tensor required");
  return shape_[0];
}

std::size_t BinaryTensor::cols() const {
  if (shape_.size() != 2) throw ShapeError("binary tensor: rank-2 tensor required");
  return shape_[1];
}

MappedTensor::MappedTensor(Shape shape, std::vector<std::uint8_t> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_elements(shape_) != values_.size()) {
    throw ShapeError("mapped tensor: shape does not match element count");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] > 1) {
      throw DomainError("mapped tensor: element " + std::to_string(i) + " is not 0 or 1");
    }
  }
}

std::vector<std::uint8_t> to_mapped(std::span<const std::int8_t> v) {
  std::vector<std::uint8_t> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != 1 && v[i] != -1) {
      throw DomainError("to_mapped: element " + std::to_string(i) + " outside {-1,+1}");
    }
    out[i] = static_cast<std::uint8_t>((v[i] + 1) / 2);
  }
  return out;
}

MappedTensor to_mapped(const BinaryTensor& t) {
  return MappedTensor(t.shape(), to_mapped(t.values()));
}

BinaryTensor to_signed(const MappedTensor& t) {
  std::vector<std::int8_t> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = static_cast<std::int8_t>(2 * t[i] - 1);
  return BinaryTensor(t.shape(), std::move(out));
}

std::int64_t nandnet_dot(std::span<const std::uint8_t> i_mapped,
                         std::span<const std::uint8_t> w_mapped) {
  if (i_mapped.size() != w_mapped.size()) {
    throw ShapeError("nandnet_dot: activation length " + std::to_string(i_mapped.size()) +
                     " != weight length " + std::to_string(w_mapped.size()));
  }
  std::int64_t and_sum = 0;
  std::int64_t sum_i = 0;
  std::int64_t sum_w = 0;
  for (std::size_t k = 0; k < i_mapped.size(); ++k) {
    if (i_mapped[k] > 1 || w_mapped[k] > 1) throw DomainError("nandnet_dot: values must be 0 or 1");
    and_sum += i_mapped[k] & w_mapped[k];
    sum_i += i_mapped[k];
    sum_w += w_mapped[k];
  }
  return nandnet_combine(and_sum, sum_i, sum_w, static_cast<std::int64_t>(i_mapped.size()));
}

std::vector<std::int64_t> signed_vmm(std::span<const std::int8_t> x, const BinaryTensor& w) {
  if (x.size() != w.rows()) throw ShapeError("signed_vmm: activation length != weight rows");
  std::vector<std::int64_t> y(w.cols(), 0);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    for (std::size_t c = 0; c < w.cols(); ++c) y[c] += x[r] * w.at(r, c);
  }
  return y;
}

TilePlan plan_tiles(std::size_t rows, std::size_t cols, std::size_t n, std::size_t m) {
  if (n == 0 || m == 0) throw ShapeError("plan_tiles: tile geometry must be non-zero");
  TilePlan plan;
  plan.n = n;
  plan.m = m;
  plan.row_tiles = (rows + n - 1) / n;
  plan.col_tiles = (cols + m - 1) / m;
  return plan;
}

TiledWeights tile_weights(const BinaryTensor& w, const TilePlan& plan) {
  const std::size_t rows = w.rows();
  const std::size_t cols = w.cols();
  if (plan.n == 0 || plan.m == 0 || !plan.covers(rows, cols)) {
    throw ShapeError("tile_weights: plan of " + std::to_string(plan.row_tiles) + "x" +
                     std::to_string(plan.col_tiles) + " tiles of " + std::to_string(plan.n) +
                     "x" + std::to_string(plan.m) + " does not cover a " + std::to_string(rows) +
                     "x" + std::to_string(cols) + " matrix");
  }
  TiledWeights out;
  out.plan = plan;
  out.rows = rows;
  out.cols = cols;
  out.tiles.reserve(plan.row_tiles * plan.col_tiles);
  for (std::size_t rt = 0; rt < plan.row_tiles; ++rt) {
    for (std::size_t ct = 0; ct < plan.col_tiles; ++ct) {
      XbarTile tile;
      tile.n = plan.n;
      tile.m = plan.m;
      tile.row_offset = rt * plan.n;
      tile.col_offset = ct * plan.m;
      tile.logical_rows = tile.row_offset < rows ? std::min(plan.n, rows - tile.row_offset) : 0;
      tile.logical_cols = tile.col_offset < cols ? std::min(plan.m, cols - tile.col_offset) : 0;
      tile.stored.assign(plan.n * plan.m, 0);
      tile.column_flip.assign(plan.m, 0);
      tile.sum_wprime.assign(plan.m, 0);
      for (std::size_t c = 0; c < tile.logical_cols; ++c) {
        std::int32_t ones = 0;
        for (std::size_t r = 0; r < tile.logical_rows; ++r) {
          const auto bit =
              static_cast<std::uint8_t>((w.at(tile.row_offset + r, tile.col_offset + c) + 1) / 2);
          tile.stored[c * plan.n + r] = bit;
          ones += bit;
        }
        tile.sum_wprime[c] = ones;
      }
      out.tiles.push_back(std::move(tile));
    }
  }
  return out;
}

BinaryTensor untile(const TiledWeights& tiled) {
  std::vector<std::int8_t> values(tiled.rows * tiled.cols, 0);
  for (const auto& tile : tiled.tiles) {
    for (std::size_t c = 0; c < tile.logical_cols; ++c) {
      for (std::size_t r = 0; r < tile.logical_rows; ++r) {
        std::uint8_t bit = tile.bit(r, c);
        if (tile.column_flip[c]) bit ^= 1;
        values[(tile.row_offset + r) * tiled.cols + tile.col_offset + c] =
            static_cast<std::int8_t>(2 * bit - 1);
      }
    }
  }
  return BinaryTensor({tiled.rows, tiled.cols}, std::move(values));
}

std::vector<std::uint8_t> tile_activation(std::span<const std::uint8_t> mapped,
                                          const TilePlan& plan, std::size_t row_tile) {
  if (row_tile >= plan.row_tiles) {
    throw ShapeError("tile_activation: row tile " + std::to_string(row_tile) + " outside plan");
  }
  std::vector<std::uint8_t> out(plan.n, 0);
  const std::size_t begin = row_tile * plan.n;
  for (std::size_t r = 0; r < plan.n && begin + r < mapped.size(); ++r) out[r] = mapped[begin + r];
  return out;
}

double MultiBitPartialSums::mean() const {
  if (values.empty()) return 0.0;
  const double total = std::accumulate(values.begin(), values.end(), 0.0);
  return total / static_cast<double>(values.size());
}

MultiBitPartialSums multibit_partial_sums(const IntMatrix& weights,
                                          std::span<const std::int32_t> activations,
                                          const MultiBitPlan& plan, std::size_t tile_n) {
  if (plan.weight_bits < 2 || plan.weight_bits > 31) {
    throw DomainError("multibit: weight_bits must be in [2, 31]");
  }
  if (plan.activation_bits < 1 || plan.activation_bits > 31) {
    throw DomainError("multibit: activation_bits must be in [1, 31]");
  }
  if (tile_n == 0) throw ShapeError("multibit: tile rows must be non-zero");
  if (weights.values.size() != weights.rows * weights.cols) {
    throw ShapeError("multibit: weight matrix shape does not match element count");
  }
  if (activations.size() != weights.rows) {
    throw ShapeError("multibit: activation length != weight rows");
  }
  const std::int32_t w_min = -(1 << (plan.weight_bits - 1));
  const std::int32_t w_max = (1 << (plan.weight_bits - 1)) - 1;
  const std::int64_t a_max = (std::int64_t{1} << plan.activation_bits) - 1;
  for (std::size_t i = 0; i < weights.values.size(); ++i) {
    if (weights.values[i] < w_min || weights.values[i] > w_max) {
      throw DomainError("multibit: weight " + std::to_string(i) + " outside " +
                        std::to_string(plan.weight_bits) + "-bit two's-complement range");
    }
  }
  for (std::size_t i = 0; i < activations.size(); ++i) {
    if (activations[i] < 0 || activations[i] > a_max) {
      throw DomainError("multibit: activation " + std::to_string(i) + " outside " +
                        std::to_string(plan.activation_bits) + "-bit unsigned range");
    }
  }

  const auto wb = static_cast<std::size_t>(plan.weight_bits);
  MultiBitPartialSums out;
  out.row_tiles = (weights.rows + tile_n - 1) / tile_n;
  out.activation_bits = static_cast<std::size_t>(plan.activation_bits);
  out.physical_columns = weights.cols * wb;
  out.values.assign(out.row_tiles * out.activation_bits * out.physical_columns, 0);

  for (std::size_t r = 0; r < weights.rows; ++r) {
    const std::size_t rt = r / tile_n;
    const auto a = static_cast<std::uint32_t>(activations[r]);
    for (std::size_t ab = 0; ab < out.activation_bits; ++ab) {
      if (((a >> ab) & 1U) == 0) continue;
      std::int32_t* row = &out.values[(rt * out.activation_bits + ab) * out.physical_columns];
      for (std::size_t c = 0; c < weights.cols; ++c) {
        const auto w = static_cast<std::uint32_t>(weights.at(r, c));
        for (std::size_t b = 0; b < wb; ++b) row[c * wb + b] += static_cast<std::int32_t>((w >> b) & 1U);
      }
    }
  }
  return out;
}

}  // namespace xbsim::bnn
