#pragma once

// Run configuration: an INI-style document with fixed sections.
//
//   [array]     rows = 64            tile rows n (power of two)
//               cols = 64            tile columns m
//               topology = opposite_ends | same_end
//   [device]    kind = sram8t | reram1t1r | linear
//               i_on = 1e-6          A, gate on, stored 1, at v_nominal
//               i_hrs = auto         A, gate on, stored 0 (device default)
//               i_off = auto         A, gate off (device default)
//               v_nominal = 0.7      V
//               v_knee = auto        V, v_nominal / 2
//               lut =                CSV LUT for stored 1 (empty: parametric)
//               lut_hrs =            CSV LUT for stored 0
//   [wire]      preset = M3 | M4 | M6 | custom
//               r_bl, r_sl, r_driver, r_sink = auto    ohms, override preset
//   [adc]       bits = auto | full | <int>
//               quantum = auto       A per level: i_on, or i_on - i_hrs with a dummy column
//               offset = 0           A
//   [dummy]     enabled = false
//               domain = analog | digital
//   [binsparx]  enabled = false
//   [solver]    method = fast | dense
//               tol = 1e-6, max_iter = 200, damping = 0.5
//               dense_tol = 1e-10, dense_max_iter = 50
//               best_effort = false
//   [run]       seed = 1, trials = 1000, threads = 1
//               output_dir = out     overridden by XBSIM_OUTPUT_DIR
//               nonidealities = true
//               x_values = auto      list such as "4,8,16" or "1-64"; auto = 1..rows
//
// Unknown sections or keys are rejected. Precedence is
// flag > environment > file > default.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "xbsim/pipeline.hpp"

namespace xbsim::config {

class RunConfig {
 public:
  // Every key at its default.
  RunConfig();

  // INI file, a JSON artifact with a "config" object, or a CSV artifact
  // with leading "# key = value" lines (re-run from an emitted result).
  void merge_file(const std::filesystem::path& path);
  void merge_ini(std::istream& in, const std::string& source);
  void merge_json(const nlohmann::json& sections);
  void merge_env();
  // "section.key" = value; throws ConfigError for unknown keys.
  void set(const std::string& dotted_key, const std::string& value);

  const std::string& get(const std::string& dotted_key) const;

  // Typed views. Throw ConfigError on malformed values.
  pipeline::EngineConfig engine() const;
  std::uint64_t seed() const;
  std::size_t trials() const;
  std::filesystem::path output_dir() const;
  std::vector<std::size_t> x_values() const;

  // {"section": {"key": "value", ...}, ...}, keys sorted.
  nlohmann::json to_json() const;
  // "# section.key = value" lines for CSV headers.
  std::string to_comment_block() const;

 private:
  std::map<std::string, std::string> values_;
};

bool parse_bool(const std::string& key, const std::string& text);
double parse_double(const std::string& key, const std::string& text);
long long parse_int(const std::string& key, const std::string& text);
// "4,8,16", "1-64", or a mix such as "1-4,8".
std::vector<std::size_t> parse_index_list(const std::string& key, const std::string& text);

}  // namespace xbsim::config
