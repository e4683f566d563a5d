#pragma once

// End-to-end crossbar VMM engine and desk-scale BNN inference.
//
// Each crossbar layer is tiled onto n x m arrays. Per input vector and row
// tile the engine optionally sparsifies the activation slice, evaluates
// every column (circuit solve or ideal ON-cell count), digitizes it, applies
// the AND-form correction with flip signs, and accumulates tiles digitally.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xbsim/binsparx.hpp"
#include "xbsim/bnn_core.hpp"
#include "xbsim/devices.hpp"
#include "xbsim/readout.hpp"
#include "xbsim/solver.hpp"

namespace xbsim::pipeline {

enum class AdcBitsMode {
  auto_bits,  // log2(n), or log2(n) - 1 with sparsification
  full,       // enough bits for every sum 0..n
  fixed,
};

struct AdcSetting {
  AdcBitsMode mode = AdcBitsMode::auto_bits;
  int bits = 0;                   // used when mode == fixed
  std::optional<double> quantum;  // defaults to i_on, or i_on - i_hrs behind a dummy column
  double offset = 0.0;
};

enum class SolverMethod { fast, dense };

struct EngineConfig {
  std::size_t n = 64;
  std::size_t m = 64;
  bool binsparx = false;
  bool nonidealities = true;
  devices::DeviceModel device;
  devices::WireModel wire = devices::WireModel::from_preset(devices::MetalPreset::M3);
  solver::Topology topology = solver::Topology::opposite_ends;
  AdcSetting adc;
  readout::DummyColumnConfig dummy;
  SolverMethod method = SolverMethod::fast;
  solver::FastOptions fast;
  solver::DenseOptions dense;
  bool best_effort = false;
  std::uint64_t seed = 1;
  int threads = 1;
};

readout::AdcModel resolve_adc(const EngineConfig& cfg);

// Per-column bookkeeping aggregated over a run. Sums refer to the raw
// AND-sum a column produces before correction.
struct PartialSumStats {
  std::vector<std::uint64_t> histogram;  // ideal AND-sums, index 0..n
  std::uint64_t columns = 0;
  std::uint64_t abs_error_total = 0;  // sum |digitized - ideal|
  std::uint64_t mismatched = 0;       // columns with digitized != ideal
  std::uint64_t clamp_events = 0;
  std::uint64_t nonconverged = 0;
  std::uint64_t cap_violations = 0;
  double deviation_total = 0.0;  // sum of ideal - sensed / quantum, in levels

  explicit PartialSumStats(std::size_t n = 0) : histogram(n + 1, 0) {}

  void merge(const PartialSumStats& other);
  double mean_ideal() const;
  double mean_abs_error() const;
  double mean_deviation() const;
};

// One weight matrix mapped onto crossbar tiles. Immutable after
// construction; vmm() may be called concurrently.
class Engine {
 public:
  Engine(const bnn::BinaryTensor& weights, EngineConfig cfg);

  std::vector<std::int64_t> vmm(std::span<const std::int8_t> activations,
                                PartialSumStats* stats = nullptr) const;

  const EngineConfig& config() const { return cfg_; }
  const readout::AdcModel& adc() const { return adc_; }
  const bnn::TiledWeights& tiles() const { return tiles_; }
  std::size_t rows() const { return tiles_.rows; }
  std::size_t cols() const { return tiles_.cols; }

 private:
  EngineConfig cfg_;
  readout::AdcModel adc_;
  bnn::TiledWeights tiles_;
};

// Folded batch norm: sign(BN(x)) as an integer comparison.
//   negate == false: +1 iff x >= value
//   negate == true:  +1 iff x <= value
struct Threshold {
  std::int64_t value = 0;
  bool negate = false;

  friend bool operator==(const Threshold&, const Threshold&) = default;
};

Threshold fold_batchnorm(double gamma, double beta, double mean, double var, double eps);
std::vector<Threshold> fold_batchnorm(std::span<const double> gamma, std::span<const double> beta,
                                      std::span<const double> mean, std::span<const double> var,
                                      double eps);

enum class LayerKind { dense, conv, sign, threshold };

std::string_view to_string(LayerKind kind);

struct ConvGeometry {
  std::size_t in_h = 0;
  std::size_t in_w = 0;
  std::size_t in_c = 0;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  std::size_t out_c = 0;
  std::size_t stride = 1;
  std::size_t pad = 0;

  std::size_t out_h() const { return (in_h + 2 * pad - kernel_h) / stride + 1; }
  std::size_t out_w() const { return (in_w + 2 * pad - kernel_w) / stride + 1; }
  std::size_t patch_size() const { return kernel_h * kernel_w * in_c; }
  void validate() const;
};

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::dense;
  // dense: [inputs, outputs]; conv: [kernel_h * kernel_w * in_c, out_c]
  bnn::BinaryTensor weights;
  ConvGeometry conv;
  std::vector<Threshold> thresholds;  // one per channel, or one broadcast
  bool full_precision = false;        // evaluated in software

  // Multi-bit profiling layers (weight_bits > 1) are never run on the engine.
  int weight_bits = 1;
  int activation_bits = 1;
  int requant_shift = 0;
  bnn::IntMatrix multibit_weights;

  bool on_crossbar() const {
    return (kind == LayerKind::dense || kind == LayerKind::conv) && !full_precision &&
           weight_bits == 1;
  }
  std::size_t input_size() const;
  std::size_t output_size() const;
};

struct Model {
  std::size_t input_size = 0;
  std::vector<LayerSpec> layers;

  bool is_multibit() const;
  // Throws ShapeError if adjacent layers disagree.
  void validate() const;
};

struct Dataset {
  std::size_t feature_size = 0;
  std::vector<std::vector<double>> features;
  std::vector<int> labels;

  std::size_t size() const { return features.size(); }
};

// im2col patch matrix of an HWC input, one row per output position.
// Padding positions take pad_value.
std::vector<std::vector<double>> im2col(std::span<const double> input, const ConvGeometry& g,
                                        double pad_value);

// Model bound to a crossbar configuration.
class Network {
 public:
  Network(Model model, EngineConfig cfg);

  struct Trace {
    std::vector<double> output;
    std::vector<PartialSumStats> layer_stats;  // indexed by layer
  };

  Trace forward(std::span<const double> input) const;
  const Model& model() const { return model_; }
  const EngineConfig& config() const { return cfg_; }
  const Engine* engine(std::size_t layer) const;

 private:
  Model model_;
  EngineConfig cfg_;
  std::vector<std::optional<Engine>> engines_;
};

struct InferenceResult {
  std::vector<int> predictions;
  double accuracy = 0.0;
  std::vector<std::string> layer_names;
  std::vector<PartialSumStats> layer_stats;
};

// Index of the largest score; ties go to the lowest index.
int argmax(std::span<const double> scores);

InferenceResult infer(const Network& network, const Dataset& data);

}  // namespace xbsim::pipeline
