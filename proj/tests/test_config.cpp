#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "xbsim/config.hpp"
#include "xbsim/error.hpp"

using namespace xbsim;
using xbsim::config::RunConfig;

TEST_CASE("defaults resolve to the documented engine") {
  const RunConfig cfg;
  const auto e = cfg.engine();
  CHECK(e.n == 64);
  CHECK(e.m == 64);
  CHECK(e.device.kind == devices::DeviceKind::sram8t);
  CHECK(e.device.i_on == 1e-6);
  CHECK(e.device.v_knee == doctest::Approx(0.35));
  CHECK(e.wire.preset == devices::MetalPreset::M3);
  CHECK(e.wire.r_bl_per_cell == 40.0);
  CHECK(e.adc.mode == pipeline::AdcBitsMode::auto_bits);
  CHECK_FALSE(e.adc.quantum.has_value());
  CHECK_FALSE(e.binsparx);
  CHECK(e.nonidealities);
  CHECK(e.fast.tol == 1e-6);
  CHECK(cfg.seed() == 1);
  CHECK(cfg.trials() == 1000);
  CHECK(cfg.x_values().size() == 64);
}

TEST_CASE("INI file values override defaults") {
  RunConfig cfg;
  std::istringstream in(
      "[array]\nrows = 128\n[device]\nkind = reram1t1r\ni_on = 2e-6\n[wire]\npreset = M6\nr_bl = 12\n"
      "[adc]\nbits = 7\n[binsparx]\nenabled = true\n[run]\nx_values = 4,8,16\n");
  cfg.merge_ini(in, "test.ini");
  const auto e = cfg.engine();
  CHECK(e.n == 128);
  CHECK(e.device.kind == devices::DeviceKind::reram1t1r);
  CHECK(e.device.i_on == 2e-6);
  CHECK(e.wire.r_bl_per_cell == 12.0);
  CHECK(e.wire.r_sl_per_cell == 8.0);
  CHECK(e.wire.preset == devices::MetalPreset::custom);
  CHECK(e.adc.mode == pipeline::AdcBitsMode::fixed);
  CHECK(e.adc.bits == 7);
  CHECK(e.binsparx);
  CHECK(cfg.x_values() == std::vector<std::size_t>{4, 8, 16});
}

TEST_CASE("unknown sections and keys are rejected") {
  RunConfig cfg;
  std::istringstream bad_key("[array]\nheight = 64\n");
  CHECK_THROWS_AS(cfg.merge_ini(bad_key, "a.ini"), ConfigError);
  std::istringstream bad_section("[mystery]\nrows = 64\n");
  CHECK_THROWS_AS(cfg.merge_ini(bad_section, "b.ini"), ConfigError);
  CHECK_THROWS_AS(cfg.set("run.colour", "red"), ConfigError);
}

TEST_CASE("malformed values are config errors") {
  RunConfig cfg;
  cfg.set("device.i_on", "1uA");
  CHECK_THROWS_AS(cfg.engine(), ConfigError);
  cfg.set("device.i_on", "1e-6");
  cfg.set("solver.method", "spice");
  CHECK_THROWS_AS(cfg.engine(), ConfigError);
  cfg.set("solver.method", "dense");
  cfg.set("device.i_hrs", "5e-6");
  CHECK_THROWS_AS(cfg.engine(), ConfigError);
  cfg.set("device.i_hrs", "auto");
  cfg.set("run.seed", "-3");
  CHECK_THROWS_AS(cfg.seed(), ConfigError);
}

TEST_CASE("index lists accept ranges") {
  CHECK(config::parse_index_list("k", "1-3,8") == std::vector<std::size_t>{1, 2, 3, 8});
  CHECK_THROWS_AS(config::parse_index_list("k", "5-2"), ConfigError);
  CHECK_THROWS_AS(config::parse_index_list("k", ""), ConfigError);
}

TEST_CASE("environment overrides the file, explicit sets override both") {
  RunConfig cfg;
  std::istringstream in("[run]\noutput_dir = from_file\n");
  cfg.merge_ini(in, "c.ini");
  ::setenv("XBSIM_OUTPUT_DIR", "from_env", 1);
  cfg.merge_env();
  CHECK(cfg.output_dir() == "from_env");
  cfg.set("run.output_dir", "from_flag");
  CHECK(cfg.output_dir() == "from_flag");
  ::unsetenv("XBSIM_OUTPUT_DIR");
}

TEST_CASE("JSON echo round-trips") {
  RunConfig a;
  a.set("array.rows", "32");
  a.set("wire.preset", "M4");
  RunConfig b;
  b.merge_json(a.to_json());
  CHECK(b.to_json() == a.to_json());
  CHECK(a.to_comment_block().find("# array.rows = 32\n") != std::string::npos);
}

TEST_CASE("CSV artifact header re-loads the embedded config") {
  RunConfig a;
  a.set("wire.preset", "M6");
  a.set("run.seed", "42");
  const auto path = std::filesystem::temp_directory_path() / "xbsim_test_config_artifact.csv";
  std::ofstream(path) << a.to_comment_block() << "x,mean\n4,0.1\n";
  RunConfig b;
  b.merge_file(path);
  CHECK(b.to_json() == a.to_json());
}
