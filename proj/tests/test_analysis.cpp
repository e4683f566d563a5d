#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "xbsim/analysis.hpp"
#include "xbsim/error.hpp"
#include "xbsim/synthetic.hpp"

using namespace xbsim;
using namespace xbsim::analysis;

TEST_CASE("exact binomial oracle sanity") {
  CHECK(oracle::expected_folded_ones(2) == doctest::Approx(0.5));
  CHECK(oracle::expected_folded_ones(64) == doctest::Approx(28.8).epsilon(0.01));
}

TEST_CASE("uniform random profile matches the analytic means") {
  const auto r = profile_uniform_random(64, 64, 4000, 17);
  CHECK(r.baseline.total == 4000 * 64);
  CHECK(r.sparsified.total == r.baseline.total);
  // Column sums within a tile share one activation vector, so the spread
  // is wider than for independent columns; 0.1 is several sigma here.
  CHECK(r.baseline.mean == doctest::Approx(16.0).epsilon(0.01));
  CHECK(std::abs(r.sparsified.mean - oracle::expected_sparse_and_sum(64)) < 0.1);
  CHECK(r.sparsified.mean <= r.baseline.mean);
  for (std::size_t s = 33; s < r.sparsified.counts.size(); ++s) CHECK(r.sparsified.counts[s] == 0);
  const double expected_reduction = 1.0 - oracle::expected_sparse_and_sum(64) / 16.0;
  CHECK(std::abs(r.reduction - expected_reduction) < 0.01);
}

TEST_CASE("model profile aggregates crossbar layers only") {
  const auto model = synthetic::make_toy_model({128, 64, 10}, 3);
  const auto data = synthetic::make_teacher_dataset(model, 40, 4);
  pipeline::EngineConfig cfg;
  const auto r = profile_model(model, data, cfg);
  REQUIRE(r.baseline.layers.size() == 2);
  CHECK(r.baseline.layers[0].name == "fc1");
  // fc1: 2 row tiles x 64 columns; fc2: 1 row tile x 10 columns.
  CHECK(r.baseline.layers[0].total == 40 * 2 * 64);
  CHECK(r.baseline.layers[1].total == 40 * 10);
  CHECK(r.sparsified.mean <= r.baseline.mean);
  CHECK(r.reduction > 0.0);
  CHECK_THROWS_AS(profile_partial_sums(model, pipeline::Dataset{}, cfg, true), ShapeError);
}

TEST_CASE("multi-bit profile histogram counts every bit-plane sum") {
  pipeline::Model model;
  model.input_size = 8;
  pipeline::LayerSpec q;
  q.name = "q";
  q.kind = pipeline::LayerKind::dense;
  q.weight_bits = 4;
  q.activation_bits = 2;
  q.multibit_weights = bnn::IntMatrix{8, 2, std::vector<std::int32_t>(16, -1)};
  model.layers.push_back(q);
  pipeline::Dataset data;
  data.feature_size = 8;
  data.features.push_back(std::vector<double>(8, 3.0));
  data.labels.push_back(0);
  const auto h = profile_multibit(model, data, 8);
  // -1 is 1111 in 4-bit two's complement, and both activation bits are
  // set, so each of 2 * 2 * 4 planes sees all 8 rows.
  CHECK(h.total == 16);
  CHECK(h.counts[8] == 16);
  data.features[0][0] = 0.5;
  CHECK_THROWS_AS(profile_multibit(model, data, 8), DomainError);
}

TEST_CASE("deviation sweep bookkeeping") {
  pipeline::EngineConfig cfg;
  cfg.device = devices::DeviceModel::linear(1e-6);
  const std::vector<std::size_t> xs{0, 1, 8, 32};
  const auto s = sweep_deviation(xs, 50, cfg);
  REQUIRE(s.points.size() == 4);
  for (const auto& p : s.points) {
    CHECK(p.samples == 50);
    CHECK(p.nonconverged == 0);
    CHECK(p.min <= p.mean);
    CHECK(p.mean <= p.max);
    CHECK(p.min >= -1e-9);
  }
  CHECK(s.at(0).mean == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.at(32).mean > s.at(8).mean);
  CHECK_THROWS_AS(s.at(5), ShapeError);
  const std::vector<std::size_t> bad{65};
  CHECK_THROWS_AS(sweep_deviation(bad, 10, cfg), ConfigError);
}

TEST_CASE("deviation sweep does not depend on thread count") {
  pipeline::EngineConfig cfg;
  const std::vector<std::size_t> xs{16};
  cfg.threads = 1;
  const auto a = sweep_deviation(xs, 64, cfg);
  cfg.threads = 4;
  const auto b = sweep_deviation(xs, 64, cfg);
  CHECK(a.points[0].mean == b.points[0].mean);
  CHECK(a.points[0].max == b.points[0].max);
}

TEST_CASE("cost report counts sparsification hardware only when enabled") {
  pipeline::EngineConfig cfg;
  cfg.binsparx = false;
  const auto base = cost_report(cfg, 256, 100);
  CHECK(base.row_tiles == 4);
  CHECK(base.col_tiles == 2);
  CHECK(base.adc_bits_active == 6);
  CHECK(base.adc_conversions == 400);
  CHECK(base.accumulation_additions == 300);
  CHECK(base.comparators == 0);
  CHECK(base.xor_flips == 0);
  CHECK(base.column_flip_register_bits == 0);
  cfg.binsparx = true;
  const auto sparse = cost_report(cfg, 256, 100);
  CHECK(sparse.adc_bits_active == 5);
  CHECK(sparse.adc_conversions == base.adc_conversions);
  CHECK(sparse.comparators == 4);
  CHECK(sparse.column_flip_register_bits == 4 * 2 * 64);
}
