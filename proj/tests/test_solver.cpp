#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "xbsim/commands.hpp"
#include "xbsim/error.hpp"
#include "xbsim/solver.hpp"

using namespace xbsim;
using namespace xbsim::solver;

namespace {

ColumnProblem random_problem(std::size_t n, std::mt19937_64& g, devices::DeviceModel dev, devices::WireModel wire) {
  ColumnProblem p;
  p.device = dev;
  p.wire = wire;
  p.v_drive = dev.v_nominal;
  p.stored_bits.resize(n);
  p.gate_bits.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    p.stored_bits[r] = g() & 1U;
    p.gate_bits[r] = g() & 1U;
  }
  return p;
}

}  // namespace

TEST_CASE("zero parasitics give the ideal current") {
  std::mt19937_64 g(1);
  const auto dev = devices::DeviceModel::sram8t(1e-6);
  for (int t = 0; t < 20; ++t) {
    const auto p = random_problem(64, g, dev, devices::WireModel::ideal());
    double expected = 0.0;
    for (std::size_t r = 0; r < 64; ++r) {
      expected += devices::cell_current(dev, p.stored_bits[r], p.gate_bits[r], dev.v_nominal);
    }
    const auto fast = solve_column_fast(p);
    const auto dense = solve_column_dense(p);
    CHECK(fast.converged);
    CHECK(dense.converged);
    CHECK(fast.i_out == doctest::Approx(expected).epsilon(1e-12));
    CHECK(dense.i_out == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("linear device matches the closed-form ladder") {
  const auto dev = devices::DeviceModel::linear(1e-6);
  const auto wire = devices::WireModel::from_preset(devices::MetalPreset::M3);
  const double g_cell = dev.i_on / dev.v_nominal;
  const std::size_t n = 64;
  const std::vector<std::vector<std::size_t>> patterns{{0}, {31}, {63}, {0, 63}, {10, 11}, {5, 40}};
  for (const auto& rows : patterns) {
    ColumnProblem p;
    p.device = dev;
    p.wire = wire;
    p.v_drive = dev.v_nominal;
    p.stored_bits.assign(n, 0);
    p.gate_bits.assign(n, 0);
    for (auto r : rows) p.stored_bits[r] = p.gate_bits[r] = 1;
    const double exact = commands::linear_ladder_current(n, rows, g_cell, wire.r_driver, wire.r_bl_per_cell,
                                                         wire.r_sl_per_cell, p.v_drive);
    std::vector<double> g(n, 0.0);
    for (auto r : rows) g[r] = g_cell;
    const double nodal = oracle::linear_column_current(g, wire.r_driver, wire.r_bl_per_cell, wire.r_sl_per_cell, p.v_drive);
    CHECK(exact == doctest::Approx(nodal).epsilon(1e-12));
    CHECK(solve_column_dense(p).i_out == doctest::Approx(exact).epsilon(1e-9));
    FastOptions tight;
    tight.tol = 1e-13;
    tight.max_iter = 5000;
    const auto fast = solve_column_fast(p, tight);
    CHECK(fast.converged);
    CHECK(fast.i_out == doctest::Approx(exact).epsilon(1e-9));
  }
}

TEST_CASE("linear device with arbitrary patterns matches Gaussian elimination") {
  std::mt19937_64 g(2);
  const auto dev = devices::DeviceModel::linear(2e-6);
  const auto wire = devices::WireModel::from_preset(devices::MetalPreset::M4);
  for (int t = 0; t < 20; ++t) {
    const auto p = random_problem(32, g, dev, wire);
    std::vector<double> cond(32, 0.0);
    for (std::size_t r = 0; r < 32; ++r) {
      if (p.stored_bits[r] && p.gate_bits[r]) cond[r] = dev.i_on / dev.v_nominal;
    }
    const double expected =
        oracle::linear_column_current(cond, wire.r_driver, wire.r_bl_per_cell, wire.r_sl_per_cell, p.v_drive);
    CHECK(solve_column_dense(p).i_out == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("fast and dense solvers agree on random problems") {
  std::mt19937_64 g(3);
  for (auto preset : {devices::MetalPreset::M3, devices::MetalPreset::M6}) {
    for (double i_on : {1e-6, 2e-6}) {
      const auto dev = devices::DeviceModel::sram8t(i_on);
      const auto wire = devices::WireModel::from_preset(preset);
      for (int t = 0; t < 30; ++t) {
        const auto p = random_problem(64, g, dev, wire);
        const auto fast = solve_column_fast(p);
        const auto dense = solve_column_dense(p);
        REQUIRE(fast.converged);
        REQUIRE(dense.converged);
        CHECK(std::abs(fast.i_out - dense.i_out) <= 0.005 * std::max(dense.i_out, i_on));
      }
    }
  }
}

TEST_CASE("IR drop only ever lowers the current, more for resistive metal") {
  std::mt19937_64 g(4);
  const auto dev = devices::DeviceModel::sram8t(1e-6);
  for (int t = 0; t < 20; ++t) {
    auto p = random_problem(64, g, dev, devices::WireModel::from_preset(devices::MetalPreset::M6));
    const double m6 = solve_column_fast(p).i_out;
    p.wire = devices::WireModel::from_preset(devices::MetalPreset::M3);
    const double m3 = solve_column_fast(p).i_out;
    p.wire = devices::WireModel::ideal();
    const double ideal = solve_column_fast(p).i_out;
    CHECK(m3 <= m6);
    CHECK(m6 <= ideal);
  }
}

TEST_CASE("same-end topology is solved consistently by both solvers") {
  std::mt19937_64 g(5);
  const auto dev = devices::DeviceModel::sram8t(1e-6);
  for (int t = 0; t < 10; ++t) {
    auto p = random_problem(64, g, dev, devices::WireModel::from_preset(devices::MetalPreset::M3));
    p.topology = Topology::same_end;
    const auto fast = solve_column_fast(p);
    const auto dense = solve_column_dense(p);
    CHECK(std::abs(fast.i_out - dense.i_out) <= 0.005 * std::max(dense.i_out, dev.i_on));
  }
}

TEST_CASE("iteration limits are reported as non-convergence") {
  std::mt19937_64 g(6);
  auto p = random_problem(64, g, devices::DeviceModel::sram8t(2e-6),
                          devices::WireModel::from_preset(devices::MetalPreset::M3));
  p.stored_bits.assign(64, 1);
  p.gate_bits.assign(64, 1);
  FastOptions one;
  one.max_iter = 1;
  const auto r = solve_column_fast(p, one);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 1);
}

TEST_CASE("problem validation") {
  ColumnProblem p;
  p.stored_bits = {1, 0};
  p.gate_bits = {1};
  CHECK_THROWS_AS(p.validate(), ShapeError);
  p.gate_bits = {1, 2};
  CHECK_THROWS_AS(p.validate(), DomainError);
  p.gate_bits = {1, 1};
  CHECK(on_cell_count(p) == 1);
  CHECK(ideal_column_current(p) == doctest::Approx(p.device.i_on));
}
