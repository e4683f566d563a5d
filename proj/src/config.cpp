#include "xbsim/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "xbsim/error.hpp"

namespace xbsim::config {

namespace {

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> table = {
      {"array.rows", "64"},
      {"array.cols", "64"},
      {"array.topology", "opposite_ends"},
      {"device.kind", "sram8t"},
      {"device.i_on", "1e-6"},
      {"device.i_hrs", "auto"},
      {"device.i_off", "auto"},
      {"device.v_nominal", "0.7"},
      {"device.v_knee", "auto"},
      {"device.lut", ""},
      {"device.lut_hrs", ""},
      {"wire.preset", "M3"},
      {"wire.r_bl", "auto"},
      {"wire.r_sl", "auto"},
      {"wire.r_driver", "auto"},
      {"wire.r_sink", "auto"},
      {"adc.bits", "auto"},
      {"adc.quantum", "auto"},
      {"adc.offset", "0"},
      {"dummy.enabled", "false"},
      {"dummy.domain", "analog"},
      {"binsparx.enabled", "false"},
      {"solver.method", "fast"},
      {"solver.tol", "1e-6"},
      {"solver.max_iter", "200"},
      {"solver.damping", "0.5"},
      {"solver.dense_tol", "1e-10"},
      {"solver.dense_max_iter", "50"},
      {"solver.best_effort", "false"},
      {"run.seed", "1"},
      {"run.trials", "1000"},
      {"run.threads", "1"},
      {"run.output_dir", "out"},
      {"run.nonidealities", "true"},
      {"run.x_values", "auto"},
  };
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool is_auto(const std::string& v) { return v == "auto" || v.empty(); }

}  // namespace

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "on" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "off" || text == "0" || text == "no") return false;
  throw ConfigError(key + ": expected a boolean, got '" + text + "'");
}

double parse_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  if (used != text.size()) throw ConfigError(key + ": trailing characters in '" + text + "'");
  return v;
}

long long parse_int(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  }
  if (used != text.size()) throw ConfigError(key + ": trailing characters in '" + text + "'");
  return v;
}

std::vector<std::size_t> parse_index_list(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      const auto v = parse_int(key, item);
      if (v < 0) throw ConfigError(key + ": negative value " + item);
      out.push_back(static_cast<std::size_t>(v));
    } else {
      const auto lo = parse_int(key, trim(item.substr(0, dash)));
      const auto hi = parse_int(key, trim(item.substr(dash + 1)));
      if (lo < 0 || hi < lo) throw ConfigError(key + ": bad range '" + item + "'");
      for (auto v = lo; v <= hi; ++v) out.push_back(static_cast<std::size_t>(v));
    }
  }
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

RunConfig::RunConfig() : values_(defaults()) {}

void RunConfig::set(const std::string& dotted_key, const std::string& value) {
  const auto it = values_.find(dotted_key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + dotted_key + "'");
  it->second = trim(value);
}

const std::string& RunConfig::get(const std::string& dotted_key) const {
  const auto it = values_.find(dotted_key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + dotted_key + "'");
  return it->second;
}

void RunConfig::merge_ini(std::istream& in, const std::string& source) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(source + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(source + ": key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      try {
        set(section + "." + key, value.data());
      } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
      }
    }
  }
}

void RunConfig::merge_json(const nlohmann::json& sections) {
  if (!sections.is_object()) throw ConfigError("config JSON must be an object of sections");
  for (const auto& [section, body] : sections.items()) {
    if (!body.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      set(section + "." + key, value.is_string() ? value.get<std::string>() : value.dump());
    }
  }
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  if (path.extension() == ".json") {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
    merge_json(doc.contains("config") ? doc.at("config") : doc);
  } else if (path.extension() == ".csv") {
    // CSV artifacts carry the resolved config as leading "# key = value" lines.
    std::string line;
    while (std::getline(in, line) && line.rfind("# ", 0) == 0) {
      const auto eq = line.find(" = ");
      if (eq == std::string::npos) continue;
      set(line.substr(2, eq - 2), line.substr(eq + 3));
    }
  } else {
    merge_ini(in, path.string());
  }
}

void RunConfig::merge_env() {
  if (const char* dir = std::getenv("XBSIM_OUTPUT_DIR"); dir != nullptr && *dir != '\0') {
    set("run.output_dir", dir);
  }
}

pipeline::EngineConfig RunConfig::engine() const {
  pipeline::EngineConfig cfg;
  const auto rows = parse_int("array.rows", get("array.rows"));
  const auto cols = parse_int("array.cols", get("array.cols"));
  if (rows < 1 || cols < 1) throw ConfigError("array.rows and array.cols must be >= 1");
  cfg.n = static_cast<std::size_t>(rows);
  cfg.m = static_cast<std::size_t>(cols);
  const auto& topo = get("array.topology");
  if (topo == "opposite_ends") {
    cfg.topology = solver::Topology::opposite_ends;
  } else if (topo == "same_end") {
    cfg.topology = solver::Topology::same_end;
  } else {
    throw ConfigError("array.topology: expected opposite_ends or same_end, got '" + topo + "'");
  }

  const double i_on = parse_double("device.i_on", get("device.i_on"));
  devices::DeviceKind kind;
  try {
    kind = devices::parse_device_kind(get("device.kind"));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("device.kind: ") + e.what());
  }
  switch (kind) {
    case devices::DeviceKind::sram8t: cfg.device = devices::DeviceModel::sram8t(i_on); break;
    case devices::DeviceKind::reram1t1r: cfg.device = devices::DeviceModel::reram1t1r(i_on); break;
    case devices::DeviceKind::linear: cfg.device = devices::DeviceModel::linear(i_on); break;
  }
  if (!is_auto(get("device.i_hrs"))) cfg.device.i_hrs = parse_double("device.i_hrs", get("device.i_hrs"));
  if (!is_auto(get("device.i_off"))) cfg.device.i_off = parse_double("device.i_off", get("device.i_off"));
  cfg.device.v_nominal = parse_double("device.v_nominal", get("device.v_nominal"));
  cfg.device.v_knee = is_auto(get("device.v_knee")) ? cfg.device.v_nominal / 2
                                                    : parse_double("device.v_knee", get("device.v_knee"));
  if (!get("device.lut").empty()) {
    cfg.device.lut = std::make_shared<devices::DeviceLut>(devices::load_device_lut(get("device.lut")));
  }
  if (!get("device.lut_hrs").empty()) {
    cfg.device.lut_hrs = std::make_shared<devices::DeviceLut>(devices::load_device_lut(get("device.lut_hrs")));
  }
  try {
    cfg.device.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("[device] ") + e.what());
  }

  try {
    cfg.wire = devices::WireModel::from_preset(devices::parse_metal_preset(get("wire.preset")));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("wire.preset: ") + e.what());
  }
  const auto wire_override = [&](const char* key, double& field) {
    const std::string k = std::string("wire.") + key;
    if (!is_auto(get(k))) {
      field = parse_double(k, get(k));
      cfg.wire.preset = devices::MetalPreset::custom;
    }
  };
  wire_override("r_bl", cfg.wire.r_bl_per_cell);
  wire_override("r_sl", cfg.wire.r_sl_per_cell);
  wire_override("r_driver", cfg.wire.r_driver);
  wire_override("r_sink", cfg.wire.r_sink);
  try {
    cfg.wire.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("[wire] ") + e.what());
  }

  const auto& bits = get("adc.bits");
  if (bits == "auto") {
    cfg.adc.mode = pipeline::AdcBitsMode::auto_bits;
  } else if (bits == "full") {
    cfg.adc.mode = pipeline::AdcBitsMode::full;
  } else {
    cfg.adc.mode = pipeline::AdcBitsMode::fixed;
    cfg.adc.bits = static_cast<int>(parse_int("adc.bits", bits));
  }
  if (!is_auto(get("adc.quantum"))) cfg.adc.quantum = parse_double("adc.quantum", get("adc.quantum"));
  cfg.adc.offset = parse_double("adc.offset", get("adc.offset"));

  cfg.dummy.enabled = parse_bool("dummy.enabled", get("dummy.enabled"));
  const auto& domain = get("dummy.domain");
  if (domain == "analog") {
    cfg.dummy.domain = readout::DummyDomain::analog;
  } else if (domain == "digital") {
    cfg.dummy.domain = readout::DummyDomain::digital;
  } else {
    throw ConfigError("dummy.domain: expected analog or digital, got '" + domain + "'");
  }

  cfg.binsparx = parse_bool("binsparx.enabled", get("binsparx.enabled"));

  const auto& method = get("solver.method");
  if (method == "fast") {
    cfg.method = pipeline::SolverMethod::fast;
  } else if (method == "dense") {
    cfg.method = pipeline::SolverMethod::dense;
  } else {
    throw ConfigError("solver.method: expected fast or dense, got '" + method + "'");
  }
  cfg.fast.tol = parse_double("solver.tol", get("solver.tol"));
  cfg.fast.max_iter = static_cast<int>(parse_int("solver.max_iter", get("solver.max_iter")));
  cfg.fast.damping = parse_double("solver.damping", get("solver.damping"));
  cfg.dense.tol = parse_double("solver.dense_tol", get("solver.dense_tol"));
  cfg.dense.max_iter = static_cast<int>(parse_int("solver.dense_max_iter", get("solver.dense_max_iter")));
  if (cfg.fast.tol <= 0 || cfg.dense.tol <= 0) throw ConfigError("solver tolerances must be > 0");
  if (cfg.fast.max_iter < 1 || cfg.dense.max_iter < 1) throw ConfigError("solver iteration limits must be >= 1");
  if (!(cfg.fast.damping > 0 && cfg.fast.damping <= 1)) throw ConfigError("solver.damping must be in (0, 1]");
  cfg.best_effort = parse_bool("solver.best_effort", get("solver.best_effort"));

  cfg.seed = seed();
  cfg.nonidealities = parse_bool("run.nonidealities", get("run.nonidealities"));
  const auto threads = parse_int("run.threads", get("run.threads"));
  if (threads < 1) throw ConfigError("run.threads must be >= 1");
  cfg.threads = static_cast<int>(threads);
  return cfg;
}

std::uint64_t RunConfig::seed() const {
  const auto& text = get("run.seed");
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("run.seed: expected an unsigned integer, got '" + text + "'");
  }
  if (used != text.size() || text.front() == '-') throw ConfigError("run.seed: malformed '" + text + "'");
  return v;
}

std::size_t RunConfig::trials() const {
  const auto v = parse_int("run.trials", get("run.trials"));
  if (v < 1) throw ConfigError("run.trials must be >= 1");
  return static_cast<std::size_t>(v);
}

std::filesystem::path RunConfig::output_dir() const { return get("run.output_dir"); }

std::vector<std::size_t> RunConfig::x_values() const {
  const auto& text = get("run.x_values");
  if (text == "auto") {
    const auto n = static_cast<std::size_t>(parse_int("array.rows", get("array.rows")));
    std::vector<std::size_t> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = i + 1;
    return xs;
  }
  return parse_index_list("run.x_values", text);
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [dotted, value] : values_) {
    const auto dot = dotted.find('.');
    out[dotted.substr(0, dot)][dotted.substr(dot + 1)] = value;
  }
  return out;
}

std::string RunConfig::to_comment_block() const {
  std::string out;
  for (const auto& [dotted, value] : values_) out += "# " + dotted + " = " + value + "\n";
  return out;
}

}  // namespace xbsim::config
