#include "xbsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "xbsim/binsparx.hpp"
#include "xbsim/error.hpp"
#include "xbsim/parallel.hpp"
#include "xbsim/rng.hpp"
#include "xbsim/synthetic.hpp"

namespace xbsim::analysis {

namespace {

double histogram_mean(const std::vector<std::uint64_t>& counts, std::uint64_t& total) {
  total = 0;
  double weighted = 0.0;
  for (std::size_t s = 0; s < counts.size(); ++s) {
    total += counts[s];
    weighted += static_cast<double>(s) * static_cast<double>(counts[s]);
  }
  return total == 0 ? 0.0 : weighted / static_cast<double>(total);
}

void accumulate(std::vector<std::uint64_t>& into, const std::vector<std::uint64_t>& from) {
  if (into.size() < from.size()) into.resize(from.size(), 0);
  for (std::size_t i = 0; i < from.size(); ++i) into[i] += from[i];
}

double reduction(const PartialSumHistogram& baseline, const PartialSumHistogram& sparsified) {
  return baseline.mean == 0.0 ? 0.0 : 1.0 - sparsified.mean / baseline.mean;
}

}  // namespace

PartialSumHistogram PartialSumHistogram::from_counts(std::vector<std::uint64_t> counts) {
  PartialSumHistogram h;
  h.counts = std::move(counts);
  h.mean = histogram_mean(h.counts, h.total);
  return h;
}

void PartialSumHistogram::add_layer(std::string name, const std::vector<std::uint64_t>& layer_counts) {
  Layer layer;
  layer.name = std::move(name);
  layer.counts = layer_counts;
  layer.mean = histogram_mean(layer.counts, layer.total);
  layers.push_back(std::move(layer));
  accumulate(counts, layer_counts);
  mean = histogram_mean(counts, total);
}

PartialSumHistogram profile_partial_sums(const pipeline::Model& model, const pipeline::Dataset& data,
                                         pipeline::EngineConfig cfg, bool binsparx) {
  if (data.size() == 0) throw ShapeError("profile: empty dataset");
  cfg.nonidealities = false;
  cfg.binsparx = binsparx;
  cfg.adc.mode = pipeline::AdcBitsMode::full;
  const pipeline::Network network(model, cfg);
  const auto result = pipeline::infer(network, data);
  PartialSumHistogram h;
  h.counts.assign(cfg.n + 1, 0);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    if (!network.engine(l)) continue;
    h.add_layer(model.layers[l].name, result.layer_stats[l].histogram);
  }
  return h;
}

ProfileReport profile_model(const pipeline::Model& model, const pipeline::Dataset& data,
                            const pipeline::EngineConfig& cfg) {
  ProfileReport r;
  r.baseline = profile_partial_sums(model, data, cfg, false);
  r.sparsified = profile_partial_sums(model, data, cfg, true);
  r.reduction = reduction(r.baseline, r.sparsified);
  return r;
}

ProfileReport profile_uniform_random(std::size_t n, std::size_t m, std::size_t tiles, std::uint64_t seed) {
  if (n == 0 || m == 0) throw ShapeError("profile_uniform_random: empty tile geometry");
  Rng rng(seed);
  std::vector<std::uint64_t> base(n + 1, 0);
  std::vector<std::uint64_t> sparse(n + 1, 0);
  const auto plan = bnn::plan_tiles(n, m, n, m);
  for (std::size_t t = 0; t < tiles; ++t) {
    const auto w = synthetic::random_binary({n, m}, rng);
    const auto act_signs = synthetic::random_signs(n, rng);
    const auto tiled = bnn::tile_weights(w, plan);
    const auto& tile = tiled.tiles.front();
    const auto sparse_tile = binsparx::sparsify_tile(tile);
    const auto act = bnn::to_mapped(act_signs);
    const auto sparse_act = binsparx::sparsify_activation(act);
    for (std::size_t c = 0; c < m; ++c) {
      std::size_t plain = 0;
      std::size_t reduced = 0;
      for (std::size_t r = 0; r < n; ++r) {
        plain += tile.bit(r, c) & act[r];
        reduced += sparse_tile.bit(r, c) & sparse_act.mapped[r];
      }
      ++base[plain];
      ++sparse[reduced];
    }
  }
  ProfileReport r;
  r.baseline = PartialSumHistogram::from_counts(std::move(base));
  r.sparsified = PartialSumHistogram::from_counts(std::move(sparse));
  r.reduction = reduction(r.baseline, r.sparsified);
  return r;
}

PartialSumHistogram profile_multibit(const pipeline::Model& model, const pipeline::Dataset& data,
                                     std::size_t tile_n) {
  if (data.size() == 0) throw ShapeError("profile: empty dataset");
  model.validate();
  for (const auto& layer : model.layers) {
    if (layer.kind != pipeline::LayerKind::dense || layer.weight_bits < 2) {
      throw ConfigError("profile_multibit: every layer must be a multi-bit dense layer");
    }
  }
  std::vector<std::vector<std::uint64_t>> counts(model.layers.size(), std::vector<std::uint64_t>(tile_n + 1, 0));
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<std::int32_t> acts;
    acts.reserve(data.features[i].size());
    for (double v : data.features[i]) {
      if (v != std::floor(v) || v < 0 || v > std::numeric_limits<std::int32_t>::max()) {
        throw DomainError("profile_multibit: features must be non-negative integers");
      }
      acts.push_back(static_cast<std::int32_t>(v));
    }
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      const auto& layer = model.layers[l];
      const bnn::MultiBitPlan plan{layer.weight_bits, layer.activation_bits};
      const auto sums = bnn::multibit_partial_sums(layer.multibit_weights, acts, plan, tile_n);
      for (const auto s : sums.values) ++counts[l][static_cast<std::size_t>(s)];
      if (l + 1 == model.layers.size()) break;
      const auto& w = layer.multibit_weights;
      const std::int64_t a_max = (std::int64_t{1} << model.layers[l + 1].activation_bits) - 1;
      std::vector<std::int32_t> next(w.cols, 0);
      for (std::size_t c = 0; c < w.cols; ++c) {
        std::int64_t y = 0;
        for (std::size_t r = 0; r < w.rows; ++r) y += static_cast<std::int64_t>(acts[r]) * w.at(r, c);
        y = std::max<std::int64_t>(0, y) >> layer.requant_shift;
        next[c] = static_cast<std::int32_t>(std::min(y, a_max));
      }
      acts = std::move(next);
    }
  }
  PartialSumHistogram h;
  h.counts.assign(tile_n + 1, 0);
  for (std::size_t l = 0; l < model.layers.size(); ++l) h.add_layer(model.layers[l].name, counts[l]);
  return h;
}

const DeviationPoint& DeviationSweep::at(std::size_t x) const {
  for (const auto& p : points) {
    if (p.x == x) return p;
  }
  throw ShapeError("deviation sweep: no point for x = " + std::to_string(x));
}

DeviationSweep sweep_deviation(std::span<const std::size_t> x_values, std::size_t trials_per_x,
                               const pipeline::EngineConfig& cfg) {
  if (trials_per_x == 0) throw ConfigError("sweep_deviation: trials_per_x must be >= 1");
  const std::size_t n = cfg.n;
  const double quantum = pipeline::resolve_adc(cfg).quantum;
  DeviationSweep sweep;
  for (const std::size_t x : x_values) {
    if (x > n) throw ConfigError("sweep_deviation: x = " + std::to_string(x) + " exceeds n = " + std::to_string(n));
    const std::uint64_t x_seed = derive_seed(cfg.seed, x);
    std::vector<double> deviation(trials_per_x);
    std::vector<std::uint8_t> failed(trials_per_x, 0);
    const std::size_t chunks = kWorkChunks;
    parallel_chunks(trials_per_x, chunks, cfg.threads, [&](std::size_t begin, std::size_t end, std::size_t) {
      solver::ColumnProblem p;
      p.device = cfg.device;
      p.wire = cfg.wire;
      p.v_drive = cfg.device.v_nominal;
      p.topology = cfg.topology;
      std::vector<std::size_t> order(n);
      for (std::size_t t = begin; t < end; ++t) {
        Rng rng(derive_seed(x_seed, t));
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        // Partial Fisher-Yates: the first x entries are the coincident cells.
        for (std::size_t i = 0; i < x; ++i) std::swap(order[i], order[i + rng.below(n - i)]);
        p.stored_bits.assign(n, 0);
        p.gate_bits.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t k = order[i];
          if (i < x) {
            p.stored_bits[k] = p.gate_bits[k] = 1;
          } else {
            switch (rng.below(3)) {
              case 0: break;
              case 1: p.gate_bits[k] = 1; break;
              default: p.stored_bits[k] = 1; break;
            }
          }
        }
        const auto solved = solver::solve_column_fast(p, cfg.fast);
        double sensed = solved.i_out;
        bool ok = solved.converged;
        if (cfg.dummy.enabled) {
          solver::ColumnProblem dummy = p;
          dummy.stored_bits.assign(n, 0);
          const auto ref = solver::solve_column_fast(dummy, cfg.fast);
          ok = ok && ref.converged;
          sensed = readout::dummy_compensate(sensed, ref.i_out);
        }
        failed[t] = ok ? 0 : 1;
        deviation[t] = static_cast<double>(x) - sensed / quantum;
      }
    });
    DeviationPoint point;
    point.x = x;
    point.samples = trials_per_x;
    point.min = std::numeric_limits<double>::infinity();
    point.max = -std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (std::size_t t = 0; t < trials_per_x; ++t) {
      total += deviation[t];
      point.min = std::min(point.min, deviation[t]);
      point.max = std::max(point.max, deviation[t]);
      point.nonconverged += failed[t];
    }
    point.mean = total / static_cast<double>(trials_per_x);
    sweep.points.push_back(point);
  }
  return sweep;
}

CostReport cost_report(const pipeline::EngineConfig& cfg, std::size_t rows, std::size_t cols) {
  const auto plan = bnn::plan_tiles(rows, cols, cfg.n, cfg.m);
  CostReport r;
  r.n = cfg.n;
  r.m = cfg.m;
  r.row_tiles = plan.row_tiles;
  r.col_tiles = plan.col_tiles;
  r.adc_bits_baseline = binsparx::adc_bits_required(cfg.n, false);
  r.adc_bits_binsparx = binsparx::adc_bits_required(cfg.n, true);
  r.adc_bits_active = cfg.binsparx ? r.adc_bits_binsparx : r.adc_bits_baseline;
  const std::uint64_t rt = plan.row_tiles;
  const std::uint64_t digitized = rt * cols;
  r.adc_conversions = digitized;
  r.adder_tree_additions = rt * (cfg.n - 1);
  r.correction_ops = 3 * digitized;
  r.accumulation_additions = (rt - 1) * cols;
  if (cfg.binsparx) {
    r.comparators = rt;
    r.xor_flips = rt * cfg.n + digitized;
    r.subtractor_uses = rt;
    r.negations = digitized;
    r.column_flip_register_bits = static_cast<std::uint64_t>(plan.row_tiles * plan.col_tiles) * cfg.m;
  }
  return r;
}

}  // namespace xbsim::analysis
