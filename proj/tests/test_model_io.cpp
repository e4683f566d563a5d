#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "xbsim/error.hpp"
#include "xbsim/model_io.hpp"
#include "xbsim/synthetic.hpp"

using namespace xbsim;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("xbsim_test_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

void write_idx(const fs::path& p, std::uint8_t type_code, const std::vector<std::uint32_t>& dims,
               const std::vector<std::uint8_t>& payload) {
  std::ofstream out(p, std::ios::binary);
  const std::uint8_t magic[4] = {0, 0, type_code, static_cast<std::uint8_t>(dims.size())};
  out.write(reinterpret_cast<const char*>(magic), 4);
  for (auto d : dims) {
    const std::uint8_t be[4] = {static_cast<std::uint8_t>(d >> 24), static_cast<std::uint8_t>(d >> 16),
                                static_cast<std::uint8_t>(d >> 8), static_cast<std::uint8_t>(d)};
    out.write(reinterpret_cast<const char*>(be), 4);
  }
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
}

}  // namespace

TEST_CASE("model save and load round trip") {
  const auto dir = scratch("model");
  const auto model = synthetic::make_toy_model({32, 16, 4}, 9);
  const auto manifest = io::save_model(model, dir, "toy");
  const auto back = io::load_model(manifest);
  REQUIRE(back.layers.size() == model.layers.size());
  CHECK(back.input_size == 32);
  CHECK(back.layers[0].weights == model.layers[0].weights);
  CHECK(back.layers[1].thresholds == model.layers[1].thresholds);
  CHECK(back.layers[2].weights == model.layers[2].weights);
}

TEST_CASE("manifest with batch-norm parameters is folded on load") {
  const auto dir = scratch("bn");
  write_text(dir / "m.json", R"({"format": "xbsim-model", "version": 1, "input_size": 2,
    "layers": [{"name": "bn", "kind": "threshold",
                "batchnorm": {"gamma": [1.0, -1.0], "beta": [0.5, 0.0], "mean": [2.0, 1.0],
                              "var": [4.0, 1.0], "eps": 0.0}}]})");
  const auto m = io::load_model(dir / "m.json");
  REQUIRE(m.layers[0].thresholds.size() == 2);
  CHECK(m.layers[0].thresholds[0] == pipeline::Threshold{1, false});
  CHECK(m.layers[0].thresholds[1] == pipeline::Threshold{1, true});
}

TEST_CASE("manifest errors") {
  const auto dir = scratch("bad");
  CHECK_THROWS_AS(io::load_model(dir / "missing.json"), IoError);
  write_text(dir / "notjson.json", "{ nope");
  CHECK_THROWS_AS(io::load_model(dir / "notjson.json"), ParseError);
  write_text(dir / "kind.json",
             R"({"format": "xbsim-model", "version": 1, "input_size": 2, "layers": [{"name": "x", "kind": "pool"}]})");
  CHECK_THROWS_AS(io::load_model(dir / "kind.json"), ParseError);
  write_text(dir / "blob.json", R"({"format": "xbsim-model", "version": 1, "input_size": 2,
    "layers": [{"name": "fc", "kind": "dense", "shape": [2, 2], "weights": "fc.bin"}]})");
  write_text(dir / "fc.bin", std::string("\x01\xff\x01", 3));
  CHECK_THROWS_AS(io::load_model(dir / "blob.json"), ParseError);
  write_text(dir / "fc.bin", std::string("\x01\xff\x01\x00", 4));
  CHECK_THROWS_AS(io::load_model(dir / "blob.json"), ParseError);
}

TEST_CASE("CSV dataset round trip and errors") {
  const auto dir = scratch("csv");
  pipeline::Dataset d;
  d.feature_size = 3;
  d.features = {{1, -1, 1}, {-1, -1, 1}};
  d.labels = {2, 0};
  io::save_csv_dataset(d, dir / "d.csv");
  const auto back = io::load_csv_dataset(dir / "d.csv");
  CHECK(back.features == d.features);
  CHECK(back.labels == d.labels);

  write_text(dir / "ragged.csv", "# comment\n1,1,1\n0,1\n");
  try {
    io::load_csv_dataset(dir / "ragged.csv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
  write_text(dir / "label.csv", "-1,1,1\n");
  CHECK_THROWS_AS(io::load_csv_dataset(dir / "label.csv"), ParseError);
  CHECK_THROWS_AS(io::load_csv_dataset(dir / "nope.csv"), IoError);
}

TEST_CASE("IDX images and labels") {
  const auto dir = scratch("idx");
  write_idx(dir / "img", 0x08, {2, 2, 2}, {0, 1, 2, 3, 255, 254, 253, 252});
  write_idx(dir / "lab", 0x08, {2}, {7, 3});
  const auto d = io::load_dataset(dir / "img", dir / "lab");
  CHECK(d.size() == 2);
  CHECK(d.feature_size == 4);
  CHECK(d.features[1] == std::vector<double>{255, 254, 253, 252});
  CHECK(d.labels == std::vector<int>{7, 3});
  write_idx(dir / "short", 0x08, {2}, {7});
  CHECK_THROWS_AS(io::load_dataset(dir / "img", dir / "short"), ParseError);
  write_idx(dir / "float", 0x0D, {2}, {0, 0, 0, 0, 0, 0, 0, 0});
  CHECK_THROWS_AS(io::load_dataset(dir / "img", dir / "float"), ParseError);
}
