#pragma once

// Binary tensors, the {-1,+1} <-> {0,1} domain transform, the AND-form dot
// product identity, and tiling of weight matrices onto crossbar-sized tiles.
//
// Orientation: a weight matrix has shape [rows, cols] where rows index the
// input activations (crossbar wordlines) and cols index the outputs
// (crossbar columns). A VMM computes y[c] = sum_r x[r] * W[r][c].

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace xbsim::bnn {

using Shape = std::vector<std::size_t>;

std::size_t shape_elements(const Shape& shape);

// Signed-domain tensor. Every element is exactly -1 or +1.
class BinaryTensor {
 public:
  BinaryTensor() = default;
  BinaryTensor(Shape shape, std::vector<std::int8_t> values);

  static BinaryTensor filled(Shape shape, std::int8_t value);

  const Shape& shape() const { return shape_; }
  std::span<const std::int8_t> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  std::int8_t operator[](std::size_t i) const { return values_[i]; }

  // Rank-2 accessors.
  std::size_t rows() const;
  std::size_t cols() const;
  std::int8_t at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

  friend bool operator==(const BinaryTensor&, const BinaryTensor&) = default;

 private:
  Shape shape_;
  std::vector<std::int8_t> values_;
};

// Hardware-domain tensor. Every element is exactly 0 or 1.
class MappedTensor {
 public:
  MappedTensor() = default;
  MappedTensor(Shape shape, std::vector<std::uint8_t> values);

  const Shape& shape() const { return shape_; }
  std::span<const std::uint8_t> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  std::uint8_t operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const MappedTensor&, const MappedTensor&) = default;

 private:
  Shape shape_;
  std::vector<std::uint8_t> values_;
};

// v' = (v + 1) / 2
MappedTensor to_mapped(const BinaryTensor& t);
// v = 2 v' - 1
BinaryTensor to_signed(const MappedTensor& t);

std::vector<std::uint8_t> to_mapped(std::span<const std::int8_t> v);

// Signed dot product evaluated through the AND form:
//   sum I*W = 4 sum I'W' - 2 sum I' - 2 sum W' + n
// where n is the vector length.
std::int64_t nandnet_dot(std::span<const std::uint8_t> i_mapped,
                         std::span<const std::uint8_t> w_mapped);

// Assembles the signed result from its three measured/precomputed sums.
constexpr std::int64_t nandnet_combine(std::int64_t and_sum, std::int64_t sum_i,
                                       std::int64_t sum_w, std::int64_t n) {
  return 4 * and_sum - 2 * sum_i - 2 * sum_w + n;
}

// Plain signed VMM, y[c] = sum_r x[r] * w[r][c].
std::vector<std::int64_t> signed_vmm(std::span<const std::int8_t> x, const BinaryTensor& w);

enum class Padding { zero_fill };

struct TilePlan {
  std::size_t n = 64;  // rows per tile
  std::size_t m = 64;  // columns per tile
  std::size_t row_tiles = 0;
  std::size_t col_tiles = 0;
  Padding padding = Padding::zero_fill;

  bool covers(std::size_t rows, std::size_t cols) const {
    return n * row_tiles >= rows && m * col_tiles >= cols;
  }
};

// Smallest grid of n x m tiles covering a rows x cols matrix.
TilePlan plan_tiles(std::size_t rows, std::size_t cols, std::size_t n, std::size_t m);

// One n x m crossbar tile. Bits are stored column-major so that each
// crossbar column is a contiguous span. Padding cells hold 0.
struct XbarTile {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t logical_rows = 0;
  std::size_t logical_cols = 0;
  std::size_t row_offset = 0;
  std::size_t col_offset = 0;
  std::vector<std::uint8_t> stored;       // n * m, column-major
  std::vector<std::uint8_t> column_flip;  // m
  std::vector<std::int32_t> sum_wprime;   // m, count of stored ones per column

  std::span<const std::uint8_t> column(std::size_t c) const {
    return std::span<const std::uint8_t>(stored).subspan(c * n, n);
  }
  std::uint8_t bit(std::size_t r, std::size_t c) const { return stored[c * n + r]; }
};

struct TiledWeights {
  TilePlan plan;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<XbarTile> tiles;  // row-major over the tile grid

  const XbarTile& tile(std::size_t row_tile, std::size_t col_tile) const {
    return tiles[row_tile * plan.col_tiles + col_tile];
  }
  XbarTile& tile(std::size_t row_tile, std::size_t col_tile) {
    return tiles[row_tile * plan.col_tiles + col_tile];
  }
};

TiledWeights tile_weights(const BinaryTensor& w, const TilePlan& plan);

// Reassembles the signed matrix, undoing any column flips.
BinaryTensor untile(const TiledWeights& tiled);

// Slice of a mapped activation vector for one row tile, zero-padded to n.
std::vector<std::uint8_t> tile_activation(std::span<const std::uint8_t> mapped,
                                          const TilePlan& plan, std::size_t row_tile);

// Integer matrix used by multi-bit profiling. Same orientation as above.
struct IntMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int32_t> values;

  std::int32_t at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

// Two's-complement weights with one bit per memory cell; unsigned
// activations streamed one bit per cycle.
struct MultiBitPlan {
  int weight_bits = 4;
  int activation_bits = 4;
};

// Ideal AND-plane partial sums for every (row tile, activation bit,
// physical column). Physical column c * weight_bits + b holds bit b of
// logical column c.
struct MultiBitPartialSums {
  std::size_t row_tiles = 0;
  std::size_t activation_bits = 0;
  std::size_t physical_columns = 0;
  std::vector<std::int32_t> values;

  std::int32_t at(std::size_t row_tile, std::size_t act_bit, std::size_t column) const {
    return values[(row_tile * activation_bits + act_bit) * physical_columns + column];
  }
  double mean() const;
};

MultiBitPartialSums multibit_partial_sums(const IntMatrix& weights,
                                          std::span<const std::int32_t> activations,
                                          const MultiBitPlan& plan, std::size_t tile_n);

}  // namespace xbsim::bnn
