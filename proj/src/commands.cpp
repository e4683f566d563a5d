#include "xbsim/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "xbsim/analysis.hpp"
#include "xbsim/binsparx.hpp"
#include "xbsim/error.hpp"
#include "xbsim/model_io.hpp"
#include "xbsim/rng.hpp"
#include "xbsim/solver.hpp"
#include "xbsim/synthetic.hpp"

namespace xbsim::commands {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

fs::path prepare_output(const config::RunConfig& cfg) {
  const auto dir = cfg.output_dir();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& doc) { write_file(path, doc.dump(2) + "\n"); }

json envelope(const config::RunConfig& cfg, const std::string& command) {
  json doc;
  doc["command"] = command;
  doc["seed"] = cfg.seed();
  doc["config"] = cfg.to_json();
  return doc;
}

std::string histogram_csv(const config::RunConfig& cfg, const std::vector<std::uint64_t>& counts) {
  std::string out = cfg.to_comment_block();
  out += "bin,count\n";
  for (std::size_t b = 0; b < counts.size(); ++b) out += std::to_string(b) + "," + std::to_string(counts[b]) + "\n";
  return out;
}

json histogram_json(const analysis::PartialSumHistogram& h) {
  json doc;
  doc["total"] = h.total;
  doc["mean"] = h.mean;
  json layers = json::array();
  for (const auto& l : h.layers) layers.push_back({{"name", l.name}, {"total", l.total}, {"mean", l.mean}});
  doc["layers"] = layers;
  return doc;
}

json stats_json(const pipeline::PartialSumStats& s) {
  return {{"columns", s.columns},
          {"mean_ideal_sum", s.mean_ideal()},
          {"mean_abs_error", s.mean_abs_error()},
          {"mismatched", s.mismatched},
          {"clamp_events", s.clamp_events},
          {"nonconverged", s.nonconverged},
          {"mean_deviation", s.mean_deviation()}};
}

json cost_json(const analysis::CostReport& c) {
  return {{"n", c.n},
          {"m", c.m},
          {"row_tiles", c.row_tiles},
          {"col_tiles", c.col_tiles},
          {"adc_bits_baseline", c.adc_bits_baseline},
          {"adc_bits_binsparx", c.adc_bits_binsparx},
          {"adc_bits_active", c.adc_bits_active},
          {"adc_conversions", c.adc_conversions},
          {"adder_tree_additions", c.adder_tree_additions},
          {"correction_ops", c.correction_ops},
          {"accumulation_additions", c.accumulation_additions},
          {"comparators", c.comparators},
          {"xor_flips", c.xor_flips},
          {"subtractor_uses", c.subtractor_uses},
          {"negations", c.negations},
          {"column_flip_register_bits", c.column_flip_register_bits}};
}

pipeline::Dataset load_inputs_dataset(const DataInputs& in) {
  if (in.dataset.empty()) throw ConfigError("a dataset path is required");
  return io::load_dataset(in.dataset, in.labels);
}

struct SolverCase {
  std::string label;
  double max_rel = 0.0;
  double mean_rel = 0.0;
  std::size_t trials = 0;
  std::size_t failures = 0;  // either solver did not converge
  double budget = 0.0;
  bool pass() const { return failures == 0 && max_rel <= budget; }
};

// Random 0/1 stored and gate bits; the fast and dense solvers see the same
// problem. Relative error is taken against max(|i_dense|, i_on) so that
// leakage-only columns do not divide by ~0.
SolverCase compare_solvers(const std::string& label, const pipeline::EngineConfig& base,
                           const devices::DeviceModel& device, const devices::WireModel& wire,
                           std::size_t trials, std::uint64_t seed, double budget) {
  SolverCase c;
  c.label = label;
  c.trials = trials;
  c.budget = budget;
  Rng rng(seed);
  solver::ColumnProblem p;
  p.device = device;
  p.wire = wire;
  p.v_drive = device.v_nominal;
  p.topology = base.topology;
  double total = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    p.stored_bits.resize(base.n);
    p.gate_bits.resize(base.n);
    for (std::size_t r = 0; r < base.n; ++r) {
      p.stored_bits[r] = rng.bit() ? 1 : 0;
      p.gate_bits[r] = rng.bit() ? 1 : 0;
    }
    const auto fast = solver::solve_column_fast(p, base.fast);
    const auto dense = solver::solve_column_dense(p, base.dense);
    if (!fast.converged || !dense.converged) ++c.failures;
    const double rel = std::abs(fast.i_out - dense.i_out) / std::max(std::abs(dense.i_out), device.i_on);
    c.max_rel = std::max(c.max_rel, rel);
    total += rel;
  }
  c.mean_rel = trials == 0 ? 0.0 : total / static_cast<double>(trials);
  return c;
}

}  // namespace

double linear_ladder_current(std::size_t n, const std::vector<std::size_t>& on_rows, double g_cell,
                             double r_driver, double r_bl, double r_sl, double v_drive) {
  const double r_cell = 1.0 / g_cell;
  const auto nn = static_cast<double>(n);
  if (on_rows.size() == 1) {
    const auto k = static_cast<double>(on_rows[0]);
    return v_drive / (r_driver + (k + 1) * r_bl + (nn - k) * r_sl + r_cell);
  }
  if (on_rows.size() == 2) {
    const auto a = static_cast<double>(std::min(on_rows[0], on_rows[1]));
    const auto b = static_cast<double>(std::max(on_rows[0], on_rows[1]));
    const double left = r_cell + (b - a) * r_sl;
    const double right = (b - a) * r_bl + r_cell;
    const double r = r_driver + (a + 1) * r_bl + left * right / (left + right) + (nn - b) * r_sl;
    return v_drive / r;
  }
  throw DomainError("linear_ladder_current: one or two conducting rows supported");
}

int report_exception(std::ostream& err) {
  try {
    throw;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ShapeError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const ParseError& e) {
    err << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const NonConvergenceError& e) {
    err << "non-convergence: " << e.what() << "\n";
    return kNonConvergence;
  } catch (const SolverError& e) {
    err << "non-convergence: " << e.what() << "\n";
    return kNonConvergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }
}

int cmd_validate_solver(const config::RunConfig& cfg, std::ostream& log) {
  const auto base = cfg.engine();
  const auto dir = prepare_output(cfg);
  const std::size_t trials = cfg.trials();
  std::vector<SolverCase> cases;

  {
    auto c = compare_solvers("ideal-wire", base, base.device, devices::WireModel::ideal(), std::min<std::size_t>(trials, 50),
                             derive_seed(cfg.seed(), 0), 1e-12);
    cases.push_back(c);
  }
  std::uint64_t index = 1;
  for (const auto preset : {devices::MetalPreset::M3, devices::MetalPreset::M4, devices::MetalPreset::M6}) {
    for (const double i_on : {1e-6, 2e-6}) {
      auto device = base.device;
      device.i_on = i_on;
      if (device.kind == devices::DeviceKind::sram8t) {
        device = devices::DeviceModel::sram8t(i_on);
      } else if (device.kind == devices::DeviceKind::reram1t1r) {
        device = devices::DeviceModel::reram1t1r(i_on);
      } else {
        device = devices::DeviceModel::linear(i_on);
      }
      device.lut = base.device.lut;
      device.lut_hrs = base.device.lut_hrs;
      const std::string label = std::string(devices::to_string(preset)) + "/" + fmt(i_on);
      cases.push_back(compare_solvers(label, base, device, devices::WireModel::from_preset(preset), trials,
                                      derive_seed(cfg.seed(), index++), 0.005));
    }
  }

  // Linear device against the closed-form ladder.
  SolverCase ladder;
  ladder.label = "linear-closed-form";
  ladder.budget = 1e-9;
  {
    const auto wire = devices::WireModel::from_preset(devices::MetalPreset::M3);
    const auto device = devices::DeviceModel::linear(1e-6);
    const double g = device.i_on / device.v_nominal;
    solver::ColumnProblem p;
    p.device = device;
    p.wire = wire;
    p.v_drive = device.v_nominal;
    p.topology = solver::Topology::opposite_ends;
    Rng rng(derive_seed(cfg.seed(), index++));
    double total = 0.0;
    const std::size_t count = std::min<std::size_t>(trials, 200);
    for (std::size_t t = 0; t < count; ++t) {
      std::vector<std::size_t> rows{static_cast<std::size_t>(rng.below(base.n))};
      if (t % 2 == 1) {
        std::size_t other = rows[0];
        while (other == rows[0] && base.n > 1) other = static_cast<std::size_t>(rng.below(base.n));
        if (other != rows[0]) rows.push_back(other);
      }
      p.stored_bits.assign(base.n, 0);
      p.gate_bits.assign(base.n, 0);
      for (const auto r : rows) p.stored_bits[r] = p.gate_bits[r] = 1;
      const double exact =
          linear_ladder_current(base.n, rows, g, wire.r_driver, wire.r_bl_per_cell, wire.r_sl_per_cell, p.v_drive);
      const auto dense = solver::solve_column_dense(p, base.dense);
      if (!dense.converged) ++ladder.failures;
      const double rel = std::abs(dense.i_out - exact) / exact;
      ladder.max_rel = std::max(ladder.max_rel, rel);
      total += rel;
      ++ladder.trials;
    }
    ladder.mean_rel = ladder.trials == 0 ? 0.0 : total / static_cast<double>(ladder.trials);
  }
  cases.push_back(ladder);

  bool all = true;
  json rows = json::array();
  for (const auto& c : cases) {
    all = all && c.pass();
    log << c.label << ": trials=" << c.trials << " max_rel=" << fmt(c.max_rel) << " mean_rel=" << fmt(c.mean_rel)
        << " budget=" << fmt(c.budget) << " failures=" << c.failures << (c.pass() ? " PASS" : " FAIL") << "\n";
    rows.push_back({{"case", c.label},
                    {"trials", c.trials},
                    {"max_rel_error", c.max_rel},
                    {"mean_rel_error", c.mean_rel},
                    {"budget", c.budget},
                    {"failures", c.failures},
                    {"pass", c.pass()}});
  }
  auto doc = envelope(cfg, "validate-solver");
  doc["cases"] = rows;
  doc["pass"] = all;
  write_json(dir / "validate_solver.json", doc);
  log << (all ? "solver validation passed" : "solver validation FAILED") << "\n";
  return all ? kOk : kValidation;
}

int cmd_profile(const config::RunConfig& cfg, const std::optional<DataInputs>& inputs, std::ostream& log) {
  const auto engine = cfg.engine();
  const auto dir = prepare_output(cfg);
  auto doc = envelope(cfg, "profile");
  if (inputs && !inputs->model.empty()) {
    const auto model = io::load_model(inputs->model);
    const auto data = load_inputs_dataset(*inputs);
    if (data.size() == 0) throw ShapeError("profile: empty dataset");
    doc["model"] = inputs->model.string();
    doc["dataset"] = inputs->dataset.string();
    if (model.is_multibit()) {
      const auto h = analysis::profile_multibit(model, data, engine.n);
      write_file(dir / "profile_multibit.csv", histogram_csv(cfg, h.counts));
      doc["multibit"] = histogram_json(h);
      log << "multi-bit mean partial sum " << fmt(h.mean) << "\n";
      write_json(dir / "profile.json", doc);
      return kOk;
    }
    const auto report = analysis::profile_model(model, data, engine);
    write_file(dir / "profile_baseline.csv", histogram_csv(cfg, report.baseline.counts));
    write_file(dir / "profile_binsparx.csv", histogram_csv(cfg, report.sparsified.counts));
    doc["baseline"] = histogram_json(report.baseline);
    doc["binsparx"] = histogram_json(report.sparsified);
    doc["reduction"] = report.reduction;
    log << "baseline mean " << fmt(report.baseline.mean) << ", binsparx mean " << fmt(report.sparsified.mean)
        << ", reduction " << fmt(report.reduction) << "\n";
  } else {
    const auto report = analysis::profile_uniform_random(engine.n, engine.m, cfg.trials(), cfg.seed());
    write_file(dir / "profile_baseline.csv", histogram_csv(cfg, report.baseline.counts));
    write_file(dir / "profile_binsparx.csv", histogram_csv(cfg, report.sparsified.counts));
    doc["workload"] = "uniform-random";
    doc["tiles"] = cfg.trials();
    doc["baseline"] = histogram_json(report.baseline);
    doc["binsparx"] = histogram_json(report.sparsified);
    doc["reduction"] = report.reduction;
    log << "uniform random: baseline mean " << fmt(report.baseline.mean) << ", binsparx mean "
        << fmt(report.sparsified.mean) << ", reduction " << fmt(report.reduction) << "\n";
  }
  write_json(dir / "profile.json", doc);
  return kOk;
}

int cmd_sweep(const config::RunConfig& cfg, std::ostream& log) {
  const auto engine = cfg.engine();
  const auto dir = prepare_output(cfg);
  const auto xs = cfg.x_values();
  const auto sweep = analysis::sweep_deviation(xs, cfg.trials(), engine);
  std::string csv = cfg.to_comment_block();
  csv += "x,mean,min,max,samples,nonconverged\n";
  std::size_t failed = 0;
  for (const auto& p : sweep.points) {
    csv += std::to_string(p.x) + "," + fmt(p.mean) + "," + fmt(p.min) + "," + fmt(p.max) + "," +
           std::to_string(p.samples) + "," + std::to_string(p.nonconverged) + "\n";
    failed += p.nonconverged;
  }
  write_file(dir / "sweep.csv", csv);
  auto doc = envelope(cfg, "sweep");
  json points = json::array();
  for (const auto& p : sweep.points) {
    points.push_back({{"x", p.x}, {"mean", p.mean}, {"min", p.min}, {"max", p.max}, {"samples", p.samples},
                      {"nonconverged", p.nonconverged}});
  }
  doc["points"] = points;
  write_json(dir / "sweep.json", doc);
  log << "swept " << sweep.points.size() << " points, " << failed << " non-converged samples\n";
  if (failed > 0 && !engine.best_effort) {
    log << "non-converged samples present; rerun with solver.best_effort = true to accept them\n";
    return kNonConvergence;
  }
  return kOk;
}

int cmd_infer(const config::RunConfig& cfg, const DataInputs& inputs, std::ostream& log) {
  const auto engine = cfg.engine();
  if (inputs.model.empty()) throw ConfigError("infer: a model manifest is required");
  const auto model = io::load_model(inputs.model);
  const auto data = load_inputs_dataset(inputs);
  if (data.size() == 0) throw ShapeError("infer: empty dataset");
  const auto dir = prepare_output(cfg);
  const pipeline::Network network(model, engine);
  const auto result = pipeline::infer(network, data);

  std::string csv = cfg.to_comment_block();
  csv += "index,label,prediction\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    csv += std::to_string(i) + "," + std::to_string(data.labels[i]) + "," + std::to_string(result.predictions[i]) + "\n";
  }
  write_file(dir / "predictions.csv", csv);

  auto doc = envelope(cfg, "infer");
  doc["model"] = inputs.model.string();
  doc["dataset"] = inputs.dataset.string();
  doc["samples"] = data.size();
  doc["accuracy"] = result.accuracy;
  json layers = json::array();
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto* eng = network.engine(l);
    if (eng == nullptr) continue;
    json entry = stats_json(result.layer_stats[l]);
    entry["name"] = model.layers[l].name;
    entry["cost"] = cost_json(analysis::cost_report(engine, eng->rows(), eng->cols()));
    layers.push_back(entry);
  }
  doc["layers"] = layers;
  write_json(dir / "infer.json", doc);
  log << "accuracy " << fmt(result.accuracy) << " over " << data.size() << " samples\n";
  return kOk;
}

int cmd_sparsify(const config::RunConfig& cfg, const fs::path& model_path, std::ostream& log) {
  auto engine_cfg = cfg.engine();
  const auto model = io::load_model(model_path);
  engine_cfg.binsparx = true;
  engine_cfg.nonidealities = false;
  engine_cfg.adc.mode = pipeline::AdcBitsMode::full;
  const std::size_t probes = cfg.trials();

  json mapping = envelope(cfg, "sparsify");
  mapping["model"] = model_path.string();
  json layers = json::array();
  json report = json::array();
  Rng rng(cfg.seed());
  for (const auto& layer : model.layers) {
    if (!layer.on_crossbar()) continue;
    const auto plan = bnn::plan_tiles(layer.weights.rows(), layer.weights.cols(), engine_cfg.n, engine_cfg.m);
    const auto plain = bnn::tile_weights(layer.weights, plan);
    const auto sparse = binsparx::sparsify(plain);

    if (!std::ranges::equal(bnn::untile(sparse).values(), layer.weights.values())) {
      log << layer.name << ": flipped tiles do not reassemble to the original weights\n";
      return kValidation;
    }
    const pipeline::Engine engine(layer.weights, engine_cfg);
    for (std::size_t t = 0; t < probes; ++t) {
      const auto x = synthetic::random_signs(layer.weights.rows(), rng);
      if (engine.vmm(x) != bnn::signed_vmm(x, layer.weights)) {
        log << layer.name << ": sparsified VMM differs from the signed VMM on probe " << t << "\n";
        return kValidation;
      }
    }

    json tiles = json::array();
    for (const auto& tile : sparse.tiles) {
      std::string flips;
      json columns = json::array();
      for (std::size_t c = 0; c < tile.m; ++c) {
        flips += tile.column_flip[c] ? '1' : '0';
        std::string bits;
        for (std::size_t r = 0; r < tile.n; ++r) bits += tile.bit(r, c) ? '1' : '0';
        columns.push_back(bits);
      }
      tiles.push_back({{"row_offset", tile.row_offset},
                       {"col_offset", tile.col_offset},
                       {"logical_rows", tile.logical_rows},
                       {"logical_cols", tile.logical_cols},
                       {"column_flip", flips},
                       {"columns", columns}});
    }
    layers.push_back({{"name", layer.name},
                      {"rows", layer.weights.rows()},
                      {"cols", layer.weights.cols()},
                      {"n", plan.n},
                      {"m", plan.m},
                      {"row_tiles", plan.row_tiles},
                      {"col_tiles", plan.col_tiles},
                      {"tiles", tiles}});
    const auto s = binsparx::summarize(plain, sparse);
    report.push_back({{"name", layer.name},
                      {"columns", s.columns},
                      {"columns_flipped", s.columns_flipped},
                      {"flipped_fraction", s.flipped_fraction},
                      {"mean_ones_before", s.mean_ones_before},
                      {"mean_ones_after", s.mean_ones_after},
                      {"adc_bits_before", s.adc_bits_before},
                      {"adc_bits_after", s.adc_bits_after},
                      {"probes", probes}});
    log << layer.name << ": " << s.columns_flipped << "/" << s.columns << " columns flipped, " << probes
        << " probes exact\n";
  }
  mapping["layers"] = layers;
  const auto dir = prepare_output(cfg);
  write_json(dir / "mapping.json", mapping);
  auto summary = envelope(cfg, "sparsify");
  summary["model"] = model_path.string();
  summary["layers"] = report;
  write_json(dir / "sparsify_report.json", summary);
  return kOk;
}

int cmd_generate(const config::RunConfig& cfg, const GenerateOptions& opt, std::ostream& log) {
  if (opt.inputs == 0 || opt.hidden == 0 || opt.classes < 2 || opt.samples == 0) {
    throw ConfigError("generate: sizes must be positive and classes >= 2");
  }
  const auto dir = prepare_output(cfg);
  const synthetic::ToyModelSpec spec{opt.inputs, opt.hidden, opt.classes};
  const auto model = synthetic::make_toy_model(spec, cfg.seed());
  const auto data = synthetic::make_teacher_dataset(model, opt.samples, derive_seed(cfg.seed(), 1));
  const auto manifest = io::save_model(model, dir, "toy");
  io::save_csv_dataset(data, dir / "toy_data.csv");
  auto doc = envelope(cfg, "generate");
  doc["manifest"] = manifest.filename().string();
  doc["dataset"] = "toy_data.csv";
  doc["inputs"] = opt.inputs;
  doc["hidden"] = opt.hidden;
  doc["classes"] = opt.classes;
  doc["samples"] = data.size();
  write_json(dir / "generate.json", doc);
  log << "wrote " << manifest.string() << " and " << data.size() << " samples\n";
  return kOk;
}

}  // namespace xbsim::commands
