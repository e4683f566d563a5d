#include "xbsim/binsparx.hpp"

#include <bit>
#include <numeric>

#include "xbsim/error.hpp"

namespace xbsim::binsparx {

SparseColumn sparsify_weight_column(std::span<const std::int8_t> col) {
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < col.size(); ++i) {
    if (col[i] != 1 && col[i] != -1) {
      throw DomainError("sparsify_weight_column: element " + std::to_string(i) +
                        " outside {-1,+1}");
    }
    sum += col[i];
  }
  SparseColumn out;
  out.flip = sum >= 0;
  out.stored.resize(col.size());
  for (std::size_t i = 0; i < col.size(); ++i) {
    const int v = out.flip ? -col[i] : col[i];
    out.stored[i] = static_cast<std::uint8_t>((v + 1) / 2);
    out.sum_wprime += out.stored[i];
  }
  return out;
}

bnn::XbarTile sparsify_tile(const bnn::XbarTile& tile) {
  bnn::XbarTile out = tile;
  const auto rows = static_cast<std::int32_t>(tile.logical_rows);
  for (std::size_t c = 0; c < tile.logical_cols; ++c) {
    // Work on the original orientation even if the tile was already flipped.
    std::int32_t ones = 0;
    for (std::size_t r = 0; r < tile.logical_rows; ++r) ones += tile.bit(r, c) ^ tile.column_flip[c];
    // sum W = 2 sum W' - rows
    const bool flip = 2 * ones - rows >= 0;
    out.column_flip[c] = flip ? 1 : 0;
    for (std::size_t r = 0; r < tile.logical_rows; ++r) {
      const auto original = static_cast<std::uint8_t>(tile.bit(r, c) ^ tile.column_flip[c]);
      out.stored[c * tile.n + r] = flip ? original ^ 1 : original;
    }
    out.sum_wprime[c] = flip ? rows - ones : ones;
  }
  return out;
}

bnn::TiledWeights sparsify(const bnn::TiledWeights& tiled) {
  bnn::TiledWeights out = tiled;
  for (auto& tile : out.tiles) tile = sparsify_tile(tile);
  return out;
}

namespace {

std::int32_t checked_sum(std::span<const std::uint8_t> v, std::size_t logical_n) {
  if (logical_n > v.size()) throw ShapeError("sparsify_activation: logical length exceeds vector");
  std::int32_t sum = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] > 1) throw DomainError("sparsify_activation: values must be 0 or 1");
    if (i >= logical_n && v[i] != 0) throw DomainError("sparsify_activation: padding row is not 0");
    sum += v[i];
  }
  return sum;
}

}  // namespace

SparseActivation sparsify_activation(std::span<const std::uint8_t> i_mapped,
                                     std::size_t logical_n) {
  const std::int32_t sum = checked_sum(i_mapped, logical_n);
  SparseActivation out;
  out.logical_n = logical_n;
  out.mapped.assign(i_mapped.begin(), i_mapped.end());
  // sum > n/2, kept in integers
  out.activation_flip = 2 * static_cast<std::size_t>(sum) > logical_n;
  if (out.activation_flip) {
    for (std::size_t i = 0; i < logical_n; ++i) out.mapped[i] ^= 1;
    out.sum_i_report = static_cast<std::int32_t>(logical_n) - sum;
  } else {
    out.sum_i_report = sum;
  }
  return out;
}

SparseActivation sparsify_activation(std::span<const std::uint8_t> i_mapped) {
  return sparsify_activation(i_mapped, i_mapped.size());
}

SparseActivation passthrough_activation(std::span<const std::uint8_t> i_mapped,
                                        std::size_t logical_n) {
  SparseActivation out;
  out.logical_n = logical_n;
  out.sum_i_report = checked_sum(i_mapped, logical_n);
  out.mapped.assign(i_mapped.begin(), i_mapped.end());
  return out;
}

std::int64_t postprocess_column(std::int64_t raw_and_sum, const SparseActivation& act,
                                const bnn::XbarTile& tile, std::size_t column) {
  if (column >= tile.m) {
    throw ShapeError("postprocess_column: column " + std::to_string(column) + " out of range [0, " +
                     std::to_string(tile.m) + ")");
  }
  const std::int64_t value = bnn::nandnet_combine(raw_and_sum, act.sum_i_report,
                                                  tile.sum_wprime[column],
                                                  static_cast<std::int64_t>(act.logical_n));
  const bool negate = act.activation_flip != (tile.column_flip[column] != 0);
  return negate ? -value : value;
}

int adc_bits_required(std::size_t n, bool binsparx_enabled) {
  if (n == 0 || !std::has_single_bit(n)) {
    throw ConfigError("adc_bits_required: n = " + std::to_string(n) +
                      " is not a power of two; choose a power-of-two array height or set the "
                      "ADC width explicitly");
  }
  const int bits = std::countr_zero(n) - (binsparx_enabled ? 1 : 0);
  if (bits < 0) {
    throw ConfigError("adc_bits_required: n = 1 leaves no ADC bits with sparsification enabled");
  }
  return bits;
}

std::optional<std::string> adc_bits_warning(std::size_t n, bool binsparx_enabled) {
  if (n == 0 || !std::has_single_bit(n)) return std::nullopt;
  const int bits = std::countr_zero(n) - (binsparx_enabled ? 1 : 0);
  if (bits <= 0) {
    return "array height " + std::to_string(n) + " yields a " + std::to_string(bits) +
           "-bit ADC; readout degenerates to a constant";
  }
  return std::nullopt;
}

SparsifyReport summarize(const bnn::TiledWeights& before, const bnn::TiledWeights& after) {
  SparsifyReport report;
  double ones_before = 0.0;
  double ones_after = 0.0;
  for (std::size_t t = 0; t < after.tiles.size(); ++t) {
    const auto& b = before.tiles[t];
    const auto& a = after.tiles[t];
    for (std::size_t c = 0; c < a.logical_cols; ++c) {
      ++report.columns;
      if (a.column_flip[c] != b.column_flip[c]) ++report.columns_flipped;
      ones_before += b.sum_wprime[c];
      ones_after += a.sum_wprime[c];
    }
  }
  if (report.columns > 0) {
    const auto cols = static_cast<double>(report.columns);
    report.flipped_fraction = static_cast<double>(report.columns_flipped) / cols;
    report.mean_ones_before = ones_before / cols;
    report.mean_ones_after = ones_after / cols;
  }
  report.adc_bits_before = adc_bits_required(before.plan.n, false);
  report.adc_bits_after = adc_bits_required(after.plan.n, true);
  return report;
}

}  // namespace xbsim::binsparx
