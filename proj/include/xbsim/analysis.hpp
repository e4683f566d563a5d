#pragma once

// Measurement methodologies: ideal partial-sum histograms, deviation
// versus ON-count sweeps, sparsification reduction statistics and an
// operation-count cost ledger.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xbsim/pipeline.hpp"

namespace xbsim::analysis {

struct PartialSumHistogram {
  std::vector<std::uint64_t> counts;  // index = ideal AND-sum
  std::uint64_t total = 0;
  double mean = 0.0;

  struct Layer {
    std::string name;
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;
    double mean = 0.0;
  };
  std::vector<Layer> layers;

  static PartialSumHistogram from_counts(std::vector<std::uint64_t> counts);
  void add_layer(std::string name, const std::vector<std::uint64_t>& counts);
};

struct ProfileReport {
  PartialSumHistogram baseline;
  PartialSumHistogram sparsified;
  double reduction = 0.0;  // 1 - mean(sparsified) / mean(baseline)
};

// Ideal AND-sums of every (tile, column, input) while running the model
// over the dataset on an ideal engine.
PartialSumHistogram profile_partial_sums(const pipeline::Model& model, const pipeline::Dataset& data,
                                         pipeline::EngineConfig cfg, bool binsparx);

ProfileReport profile_model(const pipeline::Model& model, const pipeline::Dataset& data,
                            const pipeline::EngineConfig& cfg);

// Uniform random +/-1 weights and activations: `tiles` independent n x m
// tiles, each probed with one fresh activation vector. Both modes see the
// same draws.
ProfileReport profile_uniform_random(std::size_t n, std::size_t m, std::size_t tiles,
                                     std::uint64_t seed);

// Bit-plane partial sums of a multi-bit model. Dataset features are the
// first layer's integer activations; later layers receive
// clamp(max(0, y) >> requant_shift, 0, 2^activation_bits - 1).
PartialSumHistogram profile_multibit(const pipeline::Model& model, const pipeline::Dataset& data,
                                     std::size_t tile_n);

struct DeviationPoint {
  std::size_t x = 0;
  std::size_t samples = 0;
  std::size_t nonconverged = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct DeviationSweep {
  std::vector<DeviationPoint> points;

  const DeviationPoint& at(std::size_t x) const;
};

// Places exactly x coincident (stored = 1, gate = 1) cells uniformly at
// random; every other cell is drawn uniformly from the three remaining
// (stored, gate) combinations. Deviation is x - sensed / quantum.
DeviationSweep sweep_deviation(std::span<const std::size_t> x_values, std::size_t trials_per_x,
                               const pipeline::EngineConfig& cfg);

// Per-VMM operation counts for a rows x cols layer.
struct CostReport {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t row_tiles = 0;
  std::size_t col_tiles = 0;
  int adc_bits_baseline = 0;
  int adc_bits_binsparx = 0;
  int adc_bits_active = 0;
  std::uint64_t adc_conversions = 0;
  std::uint64_t adder_tree_additions = 0;
  std::uint64_t correction_ops = 0;        // AND-form add/subtract per column
  std::uint64_t accumulation_additions = 0;
  std::uint64_t comparators = 0;
  std::uint64_t xor_flips = 0;             // activation row XORs + sign-select XORs
  std::uint64_t subtractor_uses = 0;
  std::uint64_t negations = 0;
  std::uint64_t column_flip_register_bits = 0;
};

CostReport cost_report(const pipeline::EngineConfig& cfg, std::size_t rows, std::size_t cols);

}  // namespace xbsim::analysis
