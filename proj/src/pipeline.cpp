#include "xbsim/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "xbsim/error.hpp"
#include "xbsim/parallel.hpp"

namespace xbsim::pipeline {

readout::AdcModel resolve_adc(const EngineConfig& cfg) {
  readout::AdcModel adc;
  switch (cfg.adc.mode) {
    case AdcBitsMode::auto_bits: adc.bits = binsparx::adc_bits_required(cfg.n, cfg.binsparx); break;
    case AdcBitsMode::full: adc.bits = readout::full_precision_bits(cfg.n); break;
    case AdcBitsMode::fixed: adc.bits = cfg.adc.bits; break;
  }
  // Behind a dummy column each ON cell contributes i_on - i_hrs.
  const double per_cell = cfg.dummy.enabled ? cfg.device.i_on - cfg.device.i_hrs : cfg.device.i_on;
  adc.quantum = cfg.adc.quantum.value_or(per_cell);
  adc.offset = cfg.adc.offset;
  adc.validate();
  return adc;
}

void PartialSumStats::merge(const PartialSumStats& other) {
  if (histogram.size() < other.histogram.size()) histogram.resize(other.histogram.size(), 0);
  for (std::size_t i = 0; i < other.histogram.size(); ++i) histogram[i] += other.histogram[i];
  columns += other.columns;
  abs_error_total += other.abs_error_total;
  mismatched += other.mismatched;
  clamp_events += other.clamp_events;
  nonconverged += other.nonconverged;
  cap_violations += other.cap_violations;
  deviation_total += other.deviation_total;
}

double PartialSumStats::mean_ideal() const {
  if (columns == 0) return 0.0;
  double total = 0.0;
  for (std::size_t s = 0; s < histogram.size(); ++s) total += static_cast<double>(s * histogram[s]);
  return total / static_cast<double>(columns);
}

double PartialSumStats::mean_abs_error() const {
  return columns == 0 ? 0.0 : static_cast<double>(abs_error_total) / static_cast<double>(columns);
}

double PartialSumStats::mean_deviation() const {
  return columns == 0 ? 0.0 : deviation_total / static_cast<double>(columns);
}

Engine::Engine(const bnn::BinaryTensor& weights, EngineConfig cfg)
    : cfg_(std::move(cfg)), adc_(resolve_adc(cfg_)) {
  cfg_.device.validate();
  cfg_.wire.validate();
  const auto plan = bnn::plan_tiles(weights.rows(), weights.cols(), cfg_.n, cfg_.m);
  tiles_ = bnn::tile_weights(weights, plan);
  if (cfg_.binsparx) tiles_ = binsparx::sparsify(tiles_);
}

std::vector<std::int64_t> Engine::vmm(std::span<const std::int8_t> activations,
                                      PartialSumStats* stats) const {
  if (activations.size() != tiles_.rows) {
    throw ShapeError("vmm: activation length " + std::to_string(activations.size()) +
                     " != weight rows " + std::to_string(tiles_.rows));
  }
  const auto mapped = bnn::to_mapped(activations);
  const auto& plan = tiles_.plan;
  std::vector<std::int64_t> out(tiles_.cols, 0);

  solver::ColumnProblem problem;
  problem.device = cfg_.device;
  problem.wire = cfg_.wire;
  problem.v_drive = cfg_.device.v_nominal;
  problem.topology = cfg_.topology;

  auto solve = [&](const solver::ColumnProblem& p) {
    auto r = cfg_.method == SolverMethod::fast ? solver::solve_column_fast(p, cfg_.fast)
                                               : solver::solve_column_dense(p, cfg_.dense);
    if (!r.converged) {
      if (stats) ++stats->nonconverged;
      if (!cfg_.best_effort) {
        throw NonConvergenceError("column solve did not converge (residual " +
                                  std::to_string(r.residual) + " after " +
                                  std::to_string(r.iterations) + " iterations)");
      }
    }
    return r.i_out;
  };

  for (std::size_t rt = 0; rt < plan.row_tiles; ++rt) {
    const auto slice = bnn::tile_activation(mapped, plan, rt);
    const std::size_t logical = tiles_.tile(rt, 0).logical_rows;
    const auto act = cfg_.binsparx ? binsparx::sparsify_activation(slice, logical)
                                   : binsparx::passthrough_activation(slice, logical);
    const auto cap = static_cast<std::int64_t>((logical + 1) / 2);

    problem.gate_bits = act.mapped;
    double i_dummy = 0.0;
    std::int64_t dummy_level = 0;
    const bool use_dummy = cfg_.nonidealities && cfg_.dummy.enabled;
    if (use_dummy) {
      problem.stored_bits.assign(plan.n, 0);
      i_dummy = solve(problem);
      dummy_level = readout::adc_quantize(i_dummy, adc_).level;
    }

    for (std::size_t ct = 0; ct < plan.col_tiles; ++ct) {
      const auto& tile = tiles_.tile(rt, ct);
      for (std::size_t c = 0; c < tile.logical_cols; ++c) {
        const auto column = tile.column(c);
        std::int64_t ideal = 0;
        for (std::size_t r = 0; r < plan.n; ++r) ideal += column[r] & act.mapped[r];
        if (cfg_.binsparx && ideal > cap) {
          // Sparsification guarantees the cap; a violation is a logic bug.
          if (stats) ++stats->cap_violations;
          throw std::logic_error("vmm: sparsified AND-sum " + std::to_string(ideal) +
                                 " exceeds cap " + std::to_string(cap));
        }

        double sensed = 0.0;
        std::int64_t level = 0;
        bool clamped = false;
        if (!cfg_.nonidealities) {
          sensed = static_cast<double>(ideal) * adc_.quantum + adc_.offset;
          const auto q = readout::adc_quantize(sensed, adc_);
          level = q.level;
          clamped = q.clamped;
        } else {
          problem.stored_bits.assign(column.begin(), column.end());
          const double i_out = solve(problem);
          if (use_dummy && cfg_.dummy.domain == readout::DummyDomain::digital) {
            const auto q = readout::adc_quantize(i_out, adc_);
            clamped = q.clamped;
            level = std::max<std::int64_t>(0, q.level - dummy_level);
            sensed = i_out - i_dummy;
          } else {
            sensed = use_dummy ? readout::dummy_compensate(i_out, i_dummy) : i_out;
            const auto q = readout::adc_quantize(sensed, adc_);
            level = q.level;
            clamped = q.clamped;
          }
        }

        out[tile.col_offset + c] += binsparx::postprocess_column(level, act, tile, c);

        if (stats) {
          if (stats->histogram.size() <= static_cast<std::size_t>(ideal)) {
            stats->histogram.resize(static_cast<std::size_t>(ideal) + 1, 0);
          }
          ++stats->histogram[static_cast<std::size_t>(ideal)];
          ++stats->columns;
          const auto err = static_cast<std::uint64_t>(std::llabs(level - ideal));
          stats->abs_error_total += err;
          if (err != 0) ++stats->mismatched;
          if (clamped) ++stats->clamp_events;
          stats->deviation_total += static_cast<double>(ideal) - (sensed - adc_.offset) / adc_.quantum;
        }
      }
    }
  }
  return out;
}

Threshold fold_batchnorm(double gamma, double beta, double mean, double var, double eps) {
  if (gamma == 0.0) throw DomainError("fold_batchnorm: gamma = 0 cannot be folded into a threshold");
  if (!(var + eps > 0.0)) throw DomainError("fold_batchnorm: var + eps must be > 0");
  const double t = mean - beta * std::sqrt(var + eps) / gamma;
  Threshold out;
  if (gamma > 0.0) {
    out.value = static_cast<std::int64_t>(std::ceil(t));
  } else {
    out.value = static_cast<std::int64_t>(std::floor(t));
    out.negate = true;
  }
  return out;
}

std::vector<Threshold> fold_batchnorm(std::span<const double> gamma, std::span<const double> beta,
                                      std::span<const double> mean, std::span<const double> var,
                                      double eps) {
  const std::size_t c = gamma.size();
  if (beta.size() != c || mean.size() != c || var.size() != c) {
    throw ShapeError("fold_batchnorm: parameter vectors differ in length");
  }
  std::vector<Threshold> out;
  out.reserve(c);
  for (std::size_t i = 0; i < c; ++i) out.push_back(fold_batchnorm(gamma[i], beta[i], mean[i], var[i], eps));
  return out;
}

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv: return "conv";
    case LayerKind::sign: return "sign";
    case LayerKind::threshold: return "threshold";
  }
  return "?";
}

void ConvGeometry::validate() const {
  if (in_h == 0 || in_w == 0 || in_c == 0 || kernel_h == 0 || kernel_w == 0 || out_c == 0 ||
      stride == 0) {
    throw ShapeError("conv: geometry fields must be non-zero");
  }
  if (in_h + 2 * pad < kernel_h || in_w + 2 * pad < kernel_w) {
    throw ShapeError("conv: kernel larger than padded input");
  }
}

std::size_t LayerSpec::input_size() const {
  switch (kind) {
    case LayerKind::dense:
      return weight_bits > 1 ? multibit_weights.rows : weights.rows();
    case LayerKind::conv: return conv.in_h * conv.in_w * conv.in_c;
    default: return 0;
  }
}

std::size_t LayerSpec::output_size() const {
  switch (kind) {
    case LayerKind::dense:
      return weight_bits > 1 ? multibit_weights.cols : weights.cols();
    case LayerKind::conv: return conv.out_h() * conv.out_w() * conv.out_c;
    default: return 0;
  }
}

bool Model::is_multibit() const {
  return std::any_of(layers.begin(), layers.end(), [](const LayerSpec& l) { return l.weight_bits > 1; });
}

void Model::validate() const {
  std::size_t size = input_size;
  if (size == 0) throw ShapeError("model: input size must be > 0");
  for (const auto& layer : layers) {
    switch (layer.kind) {
      case LayerKind::dense:
      case LayerKind::conv:
        if (layer.kind == LayerKind::conv) {
          layer.conv.validate();
          if (layer.weights.rows() != layer.conv.patch_size() || layer.weights.cols() != layer.conv.out_c) {
            throw ShapeError("model: layer '" + layer.name + "' weights do not match conv geometry");
          }
        }
        if (layer.input_size() != size) {
          throw ShapeError("model: layer '" + layer.name + "' expects " +
                           std::to_string(layer.input_size()) + " inputs but receives " +
                           std::to_string(size));
        }
        size = layer.output_size();
        break;
      case LayerKind::threshold:
        if (layer.thresholds.empty() || size % layer.thresholds.size() != 0) {
          throw ShapeError("model: layer '" + layer.name + "' has " +
                           std::to_string(layer.thresholds.size()) +
                           " thresholds for an input of " + std::to_string(size));
        }
        break;
      case LayerKind::sign: break;
    }
  }
}

std::vector<std::vector<double>> im2col(std::span<const double> input, const ConvGeometry& g,
                                        double pad_value) {
  g.validate();
  if (input.size() != g.in_h * g.in_w * g.in_c) throw ShapeError("im2col: input size mismatch");
  std::vector<std::vector<double>> patches;
  patches.reserve(g.out_h() * g.out_w());
  for (std::size_t oy = 0; oy < g.out_h(); ++oy) {
    for (std::size_t ox = 0; ox < g.out_w(); ++ox) {
      std::vector<double> patch;
      patch.reserve(g.patch_size());
      for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
        for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
          const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
          const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
          const bool inside = y >= 0 && x >= 0 && y < static_cast<std::ptrdiff_t>(g.in_h) &&
                              x < static_cast<std::ptrdiff_t>(g.in_w);
          for (std::size_t c = 0; c < g.in_c; ++c) {
            patch.push_back(inside ? input[(static_cast<std::size_t>(y) * g.in_w + static_cast<std::size_t>(x)) * g.in_c + c]
                                   : pad_value);
          }
        }
      }
      patches.push_back(std::move(patch));
    }
  }
  return patches;
}

Network::Network(Model model, EngineConfig cfg) : model_(std::move(model)), cfg_(std::move(cfg)) {
  model_.validate();
  if (model_.is_multibit()) {
    throw ConfigError("network: multi-bit layers are profiling-only and cannot be run on the engine");
  }
  engines_.resize(model_.layers.size());
  for (std::size_t i = 0; i < model_.layers.size(); ++i) {
    if (model_.layers[i].on_crossbar()) engines_[i].emplace(model_.layers[i].weights, cfg_);
  }
}

const Engine* Network::engine(std::size_t layer) const {
  return engines_.at(layer) ? &*engines_[layer] : nullptr;
}

namespace {

std::vector<std::int8_t> to_binary(std::span<const double> x, const std::string& layer) {
  std::vector<std::int8_t> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 1.0) {
      out[i] = 1;
    } else if (x[i] == -1.0) {
      out[i] = -1;
    } else {
      throw DomainError("layer '" + layer + "': crossbar input " + std::to_string(i) +
                        " is not +/-1; insert a sign or threshold layer first");
    }
  }
  return out;
}

std::vector<double> software_dot(std::span<const double> x, const bnn::BinaryTensor& w) {
  std::vector<double> y(w.cols(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    for (std::size_t c = 0; c < w.cols(); ++c) y[c] += x[r] * w.at(r, c);
  }
  return y;
}

}  // namespace

Network::Trace Network::forward(std::span<const double> input) const {
  if (input.size() != model_.input_size) {
    throw ShapeError("forward: input has " + std::to_string(input.size()) + " features, model expects " +
                     std::to_string(model_.input_size));
  }
  Trace trace;
  trace.layer_stats.reserve(model_.layers.size());
  std::vector<double> x(input.begin(), input.end());
  for (std::size_t li = 0; li < model_.layers.size(); ++li) {
    const auto& layer = model_.layers[li];
    trace.layer_stats.emplace_back(cfg_.n);
    auto& stats = trace.layer_stats.back();
    const Engine* eng = engine(li);
    auto apply = [&](std::span<const double> v) -> std::vector<double> {
      if (!eng) return software_dot(v, layer.weights);
      const auto y = eng->vmm(to_binary(v, layer.name), &stats);
      return {y.begin(), y.end()};
    };
    switch (layer.kind) {
      case LayerKind::dense: x = apply(x); break;
      case LayerKind::conv: {
        const double pad_value = eng ? -1.0 : 0.0;
        const auto patches = im2col(x, layer.conv, pad_value);
        std::vector<double> y;
        y.reserve(patches.size() * layer.conv.out_c);
        for (const auto& patch : patches) {
          const auto out = apply(patch);
          y.insert(y.end(), out.begin(), out.end());
        }
        x = std::move(y);
        break;
      }
      case LayerKind::sign:
        for (auto& v : x) v = v >= 0.0 ? 1.0 : -1.0;
        break;
      case LayerKind::threshold: {
        const std::size_t channels = layer.thresholds.size();
        for (std::size_t i = 0; i < x.size(); ++i) {
          const auto& t = layer.thresholds[i % channels];
          const auto value = static_cast<double>(t.value);
          const bool positive = t.negate ? x[i] <= value : x[i] >= value;
          x[i] = positive ? 1.0 : -1.0;
        }
        break;
      }
    }
  }
  trace.output = std::move(x);
  return trace;
}

int argmax(std::span<const double> scores) {
  if (scores.empty()) throw ShapeError("argmax: empty score vector");
  return static_cast<int>(std::distance(scores.begin(), std::max_element(scores.begin(), scores.end())));
}

InferenceResult infer(const Network& network, const Dataset& data) {
  if (data.size() == 0) throw ShapeError("infer: empty dataset");
  if (data.labels.size() != data.size()) throw ShapeError("infer: label count != sample count");
  const std::size_t layers = network.model().layers.size();
  const std::size_t chunks = kWorkChunks;

  InferenceResult result;
  result.predictions.assign(data.size(), 0);
  std::vector<std::vector<PartialSumStats>> partial(chunks);
  parallel_chunks(data.size(), chunks, network.config().threads,
                  [&](std::size_t begin, std::size_t end, std::size_t chunk) {
                    auto& mine = partial[chunk];
                    mine.assign(layers, PartialSumStats(network.config().n));
                    for (std::size_t i = begin; i < end; ++i) {
                      auto trace = network.forward(data.features[i]);
                      result.predictions[i] = argmax(trace.output);
                      for (std::size_t l = 0; l < layers; ++l) mine[l].merge(trace.layer_stats[l]);
                    }
                  });
  result.layer_stats.assign(layers, PartialSumStats(network.config().n));
  for (const auto& chunk : partial) {
    for (std::size_t l = 0; l < chunk.size(); ++l) result.layer_stats[l].merge(chunk[l]);
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) correct += result.predictions[i] == data.labels[i];
  result.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  for (const auto& layer : network.model().layers) result.layer_names.push_back(layer.name);
  return result;
}

}  // namespace xbsim::pipeline
