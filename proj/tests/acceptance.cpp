// Acceptance harness: one PASS/FAIL line per criterion. Exit status is
// nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "xbsim/analysis.hpp"
#include "xbsim/binsparx.hpp"
#include "xbsim/commands.hpp"
#include "xbsim/config.hpp"
#include "xbsim/pipeline.hpp"
#include "xbsim/readout.hpp"
#include "xbsim/rng.hpp"
#include "xbsim/solver.hpp"
#include "xbsim/synthetic.hpp"

using namespace xbsim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("xbsim_acceptance_" + name);
  fs::remove_all(dir);
  return dir;
}

// 1. Ideal sparsified engine with a full-precision ADC equals the signed VMM.
Outcome functional_exactness() {
  std::mt19937_64 g(101);
  std::size_t pairs = 0;
  std::size_t mismatches = 0;
  std::size_t grids = 0;
  for (const std::size_t n : {8, 64, 128}) {
    // Shapes exercise single tiles, exact multiples and ragged edges in both directions.
    const std::vector<std::pair<std::size_t, std::size_t>> shapes{
        {n, n}, {n / 2 + 1, n - 1}, {3 * n + 5, 2 * n + 3}, {2 * n, 1}};
    for (const auto& [rows, cols] : shapes) {
      ++grids;
      const auto w = oracle::random_signs(rows * cols, g);
      pipeline::EngineConfig cfg;
      cfg.n = n;
      cfg.m = n;
      cfg.binsparx = true;
      cfg.nonidealities = false;
      cfg.adc.mode = pipeline::AdcBitsMode::full;
      const pipeline::Engine engine(bnn::BinaryTensor({rows, cols}, w), cfg);
      const std::size_t probes = 900;
      for (std::size_t t = 0; t < probes; ++t) {
        // Skewed activations reach the flip threshold from both sides.
        std::vector<std::int8_t> x(rows);
        const double p = static_cast<double>(t % 9) / 8.0;
        std::bernoulli_distribution plus(p);
        for (auto& v : x) v = plus(g) ? 1 : -1;
        if (engine.vmm(x) != oracle::vmm(x, w, rows, cols)) ++mismatches;
        ++pairs;
      }
    }
  }
  return {mismatches == 0 && pairs >= 10000,
          std::to_string(pairs) + " (I,W) pairs over " + std::to_string(grids) + " tiling grids, " +
              std::to_string(mismatches) + " mismatches"};
}

// 2. Ones cap after sparsification, and exhaustive ADC losslessness at n = 64.
Outcome sparsification_cap() {
  const std::size_t n = 64;
  const std::size_t cap = (n + 1) / 2;
  std::size_t cap_violations = 0;
  // Every ones count for weights and activations, at several positions each.
  std::mt19937_64 g(202);
  for (std::size_t k = 0; k <= n; ++k) {
    for (int rep = 0; rep < 16; ++rep) {
      std::vector<std::int8_t> col(n, -1);
      std::vector<std::uint8_t> act(n, 0);
      std::vector<std::size_t> idx(n);
      for (std::size_t i = 0; i < n; ++i) idx[i] = i;
      std::shuffle(idx.begin(), idx.end(), g);
      for (std::size_t i = 0; i < k; ++i) {
        col[idx[i]] = 1;
        act[idx[i]] = 1;
      }
      const auto sw = binsparx::sparsify_weight_column(col);
      const auto sa = binsparx::sparsify_activation(act);
      if (std::count(sw.stored.begin(), sw.stored.end(), 1) > static_cast<long>(cap)) ++cap_violations;
      if (std::count(sa.mapped.begin(), sa.mapped.end(), 1) > static_cast<long>(cap)) ++cap_violations;
    }
  }

  // Achievable ideal AND-sums: stored ones w <= cap, activation ones a <= cap,
  // overlap s with max(0, a + w - n) <= s <= min(a, w). Each triple is built
  // explicitly and pushed through the ideal readout.
  pipeline::EngineConfig cfg;
  cfg.n = n;
  cfg.binsparx = true;
  cfg.nonidealities = false;
  const auto adc = pipeline::resolve_adc(cfg);
  std::size_t triples = 0;
  std::vector<std::size_t> lossy_sums;
  for (std::size_t w = 0; w <= cap; ++w) {
    for (std::size_t a = 0; a <= cap; ++a) {
      const std::size_t lo = a + w > n ? a + w - n : 0;
      for (std::size_t s = lo; s <= std::min(a, w); ++s) {
        ++triples;
        solver::ColumnProblem p;
        p.stored_bits.assign(n, 0);
        p.gate_bits.assign(n, 0);
        for (std::size_t i = 0; i < w; ++i) p.stored_bits[i] = 1;
        // Overlap the first s stored rows, then fill gates past the stored block.
        for (std::size_t i = 0; i < s; ++i) p.gate_bits[i] = 1;
        for (std::size_t i = 0; i < a - s; ++i) p.gate_bits[w + i] = 1;
        const auto level = readout::adc_quantize(solver::ideal_column_current(p) / cfg.device.i_on * adc.quantum +
                                                     adc.offset, adc)
                               .level;
        if (level != static_cast<std::int64_t>(s) &&
            std::find(lossy_sums.begin(), lossy_sums.end(), s) == lossy_sums.end()) {
          lossy_sums.push_back(s);
        }
      }
    }
  }
  std::string detail = std::to_string(cap_violations) + " cap violations; " + std::to_string(adc.bits) +
                       "-bit ADC over " + std::to_string(triples) + " achievable (w, a, sum) triples: ";
  if (lossy_sums.empty()) {
    detail += "lossless";
  } else {
    detail += "sums {";
    for (std::size_t i = 0; i < lossy_sums.size(); ++i) detail += (i ? "," : "") + std::to_string(lossy_sums[i]);
    detail += "} saturate at level " + std::to_string(adc.max_level());
  }
  return {cap_violations == 0 && lossy_sums.empty(), detail};
}

// 3. Uniform random partial-sum statistics.
Outcome partial_sum_statistics() {
  const std::size_t n = 64;
  const std::size_t tiles = 15625;  // x 64 columns = 1e6 sampled columns
  const auto r = analysis::profile_uniform_random(n, 64, tiles, 303);
  const double analytic = static_cast<double>(n) / 4.0;
  const bool mean_ok = std::abs(r.baseline.mean - analytic) <= 0.02 * analytic;
  const bool band_ok = r.reduction >= 0.40 && r.reduction <= 0.55;
  return {mean_ok && band_ok && r.baseline.total >= 1000000,
          std::to_string(r.baseline.total) + " columns, baseline mean " + num(r.baseline.mean) + " (target 16 +/- 2%: " +
              (mean_ok ? "ok" : "out") + "), sparsified mean " + num(r.sparsified.mean) + ", reduction " +
              num(r.reduction) + " (target 0.40-0.55: " + (band_ok ? "ok" : "out") + ")"};
}

// 4. Fast solver against the dense nodal oracle and the closed-form ladder.
Outcome solver_validation() {
  config::RunConfig cfg;
  cfg.set("run.trials", "1000");
  cfg.set("run.output_dir", scratch("solver").string());
  std::ostringstream log;
  const int code = commands::cmd_validate_solver(cfg, log);
  std::string detail;
  std::istringstream lines(log.str());
  for (std::string line; std::getline(lines, line);) {
    const auto max_at = line.find("max_rel=");
    if (max_at == std::string::npos) continue;
    const auto end = line.find(' ', max_at);
    detail += (detail.empty() ? "" : ", ") + line.substr(0, line.find(':')) + " " +
              line.substr(max_at + 8, end - max_at - 8);
  }
  return {code == commands::kOk, "max rel error per case: " + detail};
}

// 5. Deviation grows superlinearly in the ON count.
Outcome superlinearity() {
  const std::vector<std::size_t> xs{4, 8, 16, 32};
  bool ok = true;
  std::string detail;
  for (const auto preset : {devices::MetalPreset::M3, devices::MetalPreset::M4}) {
    pipeline::EngineConfig cfg;
    cfg.wire = devices::WireModel::from_preset(preset);
    cfg.seed = 505;
    cfg.threads = 4;
    const auto s = analysis::sweep_deviation(xs, 500, cfg);
    detail += std::string(detail.empty() ? "" : "; ") + std::string(devices::to_string(preset)) + " d =";
    for (const auto x : xs) detail += " " + num(s.at(x).mean);
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      ok = ok && s.at(xs[i + 1]).mean > 2.0 * s.at(xs[i]).mean && s.at(xs[i]).nonconverged == 0;
    }
  }
  return {ok, detail + " at x = 4, 8, 16, 32"};
}

// 6. Sparsification lowers readout error and does not hurt toy accuracy.
Outcome error_reduction() {
  bool ok = true;
  std::string detail;
  for (const std::uint64_t seed : {11, 12, 13}) {
    std::mt19937_64 g(seed);
    const std::size_t rows = 256;
    const std::size_t cols = 64;
    const auto w = oracle::random_signs(rows * cols, g);
    std::vector<std::vector<std::int8_t>> xs;
    for (int t = 0; t < 100; ++t) xs.push_back(oracle::random_signs(rows, g));

    double err[2] = {0.0, 0.0};
    double acc[2] = {0.0, 0.0};
    const auto model = synthetic::make_toy_model({}, seed);
    const auto data = synthetic::make_teacher_dataset(model, 300, seed + 100);
    for (int mode = 0; mode < 2; ++mode) {
      pipeline::EngineConfig cfg;
      cfg.binsparx = mode == 1;
      cfg.seed = seed;
      cfg.threads = 4;
      const pipeline::Engine engine(bnn::BinaryTensor({rows, cols}, w), cfg);
      pipeline::PartialSumStats stats;
      for (const auto& x : xs) engine.vmm(x, &stats);
      err[mode] = stats.mean_abs_error();
      acc[mode] = pipeline::infer(pipeline::Network(model, cfg), data).accuracy;
    }
    ok = ok && err[1] < err[0] && acc[1] >= acc[0];
    detail += std::string(detail.empty() ? "" : "; ") + "seed " + std::to_string(seed) + ": error " + num(err[0]) +
              " -> " + num(err[1]) + ", accuracy " + num(acc[0]) + " -> " + num(acc[1]);
  }
  return {ok, detail};
}

// Mean |deviation| in levels over random ReRAM columns with at least 8
// HRS cells gated on, without and with the dummy column.
std::pair<double, double> dummy_deviation(double ratio, const devices::WireModel& wire) {
  const std::size_t n = 64;
  pipeline::EngineConfig cfg;
  cfg.device = devices::DeviceModel::reram1t1r(1e-6, 1e-6 / ratio);
  cfg.wire = wire;
  auto comp_cfg = cfg;
  comp_cfg.dummy.enabled = true;
  const double q_plain = pipeline::resolve_adc(cfg).quantum;
  const double q_comp = pipeline::resolve_adc(comp_cfg).quantum;
  Rng rng(derive_seed(707, static_cast<std::uint64_t>(ratio)));
  double plain = 0.0;
  double comp = 0.0;
  std::size_t columns = 0;
  while (columns < 300) {
    solver::ColumnProblem p;
    p.device = cfg.device;
    p.wire = cfg.wire;
    p.v_drive = cfg.device.v_nominal;
    p.stored_bits.resize(n);
    p.gate_bits.resize(n);
    std::size_t hrs_on = 0;
    for (std::size_t r = 0; r < n; ++r) {
      p.stored_bits[r] = rng.bit() ? 1 : 0;
      p.gate_bits[r] = rng.bit() ? 1 : 0;
      if (p.stored_bits[r] == 0 && p.gate_bits[r] == 1) ++hrs_on;
    }
    if (hrs_on < 8) continue;
    ++columns;
    const double ideal = static_cast<double>(solver::on_cell_count(p));
    const double i_out = solver::solve_column_fast(p, cfg.fast).i_out;
    auto ref = p;
    std::fill(ref.stored_bits.begin(), ref.stored_bits.end(), 0);
    const double i_dummy = solver::solve_column_fast(ref, cfg.fast).i_out;
    plain += std::abs(ideal - i_out / q_plain);
    comp += std::abs(ideal - readout::dummy_compensate(i_out, i_dummy) / q_comp);
  }
  return {plain / static_cast<double>(columns), comp / static_cast<double>(columns)};
}

// 7. Dummy-column compensation of HRS leakage on ReRAM columns. The
// default M3 engine is judged; ideal wires are reported for context.
Outcome dummy_column() {
  bool ok = true;
  std::string judged;
  std::string context;
  for (const double ratio : {10.0, 25.0, 50.0}) {
    const auto [plain, comp] = dummy_deviation(ratio, devices::WireModel::from_preset(devices::MetalPreset::M3));
    ok = ok && comp < plain;
    judged += std::string(judged.empty() ? "" : ", ") + num(ratio) + ": " + num(plain) + " -> " + num(comp);
    const auto [ip, ic] = dummy_deviation(ratio, devices::WireModel::ideal());
    context += std::string(context.empty() ? "" : ", ") + num(ratio) + ": " + num(ip) + " -> " + num(ic);
  }
  return {ok, "mean |deviation| in levels by i_on/i_hrs, uncompensated -> compensated; M3 " + judged +
                  "; ideal wires " + context};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream bytes;
    bytes << in.rdbuf();
    files[fs::relative(e.path(), dir).string()] = bytes.str();
  }
  return files;
}

void run_all_commands(const fs::path& dir) {
  config::RunConfig cfg;
  cfg.set("run.output_dir", dir.string());
  cfg.set("run.seed", "808");
  cfg.set("run.trials", "40");
  cfg.set("run.threads", "4");
  cfg.set("run.x_values", "1,8,32");
  std::ostringstream log;
  commands::GenerateOptions opt;
  opt.samples = 60;
  commands::cmd_generate(cfg, opt, log);
  const commands::DataInputs in{dir / "toy.json", dir / "toy_data.csv", {}};
  commands::cmd_sparsify(cfg, in.model, log);
  commands::cmd_infer(cfg, in, log);
  commands::cmd_profile(cfg, in, log);
  commands::cmd_sweep(cfg, log);
  commands::cmd_validate_solver(cfg, log);
}

// 8. Byte-identical artifacts for identical config and seed.
Outcome determinism() {
  const auto dir = scratch("determinism");
  run_all_commands(dir);
  const auto first = snapshot(dir);
  fs::remove_all(dir);
  run_all_commands(dir);
  const auto second = snapshot(dir);
  std::size_t differing = 0;
  for (const auto& [name, bytes] : first) {
    const auto it = second.find(name);
    if (it == second.end() || it->second != bytes) ++differing;
  }
  const bool ok = !first.empty() && first.size() == second.size() && differing == 0;
  return {ok, std::to_string(first.size()) + " artifacts compared, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xbsim acceptance criteria"};
  int only = 0;
  app.add_option("--only", only, "run a single criterion (1-8)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"functional exactness", functional_exactness},
      {"sparsification cap and lossless ADC", sparsification_cap},
      {"partial-sum statistics", partial_sum_statistics},
      {"solver validation", solver_validation},
      {"deviation superlinearity", superlinearity},
      {"error reduction under non-idealities", error_reduction},
      {"dummy-column efficacy", dummy_column},
      {"determinism", determinism},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<std::size_t>(only) != i + 1) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    all = all && o.pass;
    std::cout << "criterion " << i + 1 << " (" << criteria[i].first << "): " << (o.pass ? "PASS" : "FAIL") << " - "
              << o.detail << " [" << num(secs) << " s]\n";
  }
  return all ? 0 : 1;
}
