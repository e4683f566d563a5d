#pragma once

// Static weight-column and dynamic activation sparsification with the flip
// bookkeeping that restores exact VMM results after readout.
//
// A stored column or activation vector never holds more than ceil(n/2)
// ones, so every ideal AND-sum lies in [0, ceil(n/2)].

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xbsim/bnn_core.hpp"

namespace xbsim::binsparx {

struct SparseColumn {
  std::vector<std::uint8_t> stored;
  bool flip = false;
  std::int32_t sum_wprime = 0;
};

// Stores -col when sum(col) >= 0, col otherwise.
SparseColumn sparsify_weight_column(std::span<const std::int8_t> col);

// Applies weight sparsification to every logical column of a tile. Padding
// cells stay 0 and do not take part in the decision.
bnn::XbarTile sparsify_tile(const bnn::XbarTile& tile);

bnn::TiledWeights sparsify(const bnn::TiledWeights& tiled);

struct SparseActivation {
  std::vector<std::uint8_t> mapped;  // post-flip, physical length
  bool activation_flip = false;
  std::int32_t sum_i_report = 0;     // sum I' fed to the correction step
  std::size_t logical_n = 0;
};

// Flips the first logical_n entries iff their sum exceeds logical_n / 2.
// Entries past logical_n are padding and must be 0.
SparseActivation sparsify_activation(std::span<const std::uint8_t> i_mapped,
                                     std::size_t logical_n);
SparseActivation sparsify_activation(std::span<const std::uint8_t> i_mapped);

// Same record without flipping, for the baseline path.
SparseActivation passthrough_activation(std::span<const std::uint8_t> i_mapped,
                                        std::size_t logical_n);

// AND-form correction followed by the (-1)^(activation_flip XOR column_flip)
// sign fix. raw_and_sum is the digitized AND-sum of the stored column.
std::int64_t postprocess_column(std::int64_t raw_and_sum, const SparseActivation& act,
                                const bnn::XbarTile& tile, std::size_t column);

// log2(n) bits for the baseline, log2(n) - 1 with sparsification.
// n must be a power of two.
int adc_bits_required(std::size_t n, bool binsparx_enabled);

// Non-empty when the requested geometry degenerates to a zero-bit ADC.
std::optional<std::string> adc_bits_warning(std::size_t n, bool binsparx_enabled);

// Per-layer summary written by the sparsify command.
struct SparsifyReport {
  std::size_t columns = 0;
  std::size_t columns_flipped = 0;
  double flipped_fraction = 0.0;
  double mean_ones_before = 0.0;
  double mean_ones_after = 0.0;
  int adc_bits_before = 0;
  int adc_bits_after = 0;
};

SparsifyReport summarize(const bnn::TiledWeights& before, const bnn::TiledWeights& after);

}  // namespace xbsim::binsparx
