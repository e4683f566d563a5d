#include "xbsim/devices.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "xbsim/error.hpp"

namespace xbsim::devices {

namespace {

bool strictly_increasing(const std::vector<double>& axis) {
  for (std::size_t i = 1; i < axis.size(); ++i) {
    if (!(axis[i] > axis[i - 1])) return false;
  }
  return true;
}

// Index i such that axis[i] <= x <= axis[i+1], with x already clamped.
std::size_t bracket(const std::vector<double>& axis, double x) {
  auto it = std::upper_bound(axis.begin(), axis.end(), x);
  auto idx = static_cast<std::size_t>(std::distance(axis.begin(), it));
  if (idx == 0) return 0;
  return std::min(idx - 1, axis.size() - 2);
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& text, std::string_view source, std::size_t row,
                    std::size_t col) {
  auto fail = [&](const std::string& why) {
    return ParseError(std::string(source) + ": row " + std::to_string(row) + ", column " +
                      std::to_string(col) + ": " + why);
  };
  if (text.empty()) throw fail("empty cell");
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw fail("'" + text + "' is not a number");
  }
  if (used != text.size()) throw fail("'" + text + "' is not a number");
  if (!std::isfinite(value)) throw fail("non-finite value");
  return value;
}

double curve(double target, double v, double v_nominal, double v_knee, DeviceKind kind) {
  if (kind == DeviceKind::linear) return target * v / v_nominal;
  return target * std::tanh(v / v_knee) / std::tanh(v_nominal / v_knee);
}

}  // namespace

DeviceLut::DeviceLut(std::vector<double> gate_axis, std::vector<double> device_axis,
                     std::vector<double> currents)
    : gate_axis_(std::move(gate_axis)),
      device_axis_(std::move(device_axis)),
      currents_(std::move(currents)) {
  if (gate_axis_.size() < 2 || device_axis_.size() < 2) {
    throw ParseError("device LUT: each axis needs at least two points");
  }
  if (!strictly_increasing(gate_axis_)) throw ParseError("device LUT: gate axis not strictly increasing");
  if (!strictly_increasing(device_axis_)) {
    throw ParseError("device LUT: device axis not strictly increasing");
  }
  if (currents_.size() != gate_axis_.size() * device_axis_.size()) {
    throw ParseError("device LUT: current table does not match axis sizes");
  }
  for (double c : currents_) {
    if (!std::isfinite(c) || c < 0.0) throw ParseError("device LUT: currents must be finite and >= 0");
  }
}

DeviceLut::Sample DeviceLut::lookup(double v_gate, double v_device) const {
  Sample s;
  const double g = std::clamp(v_gate, gate_axis_.front(), gate_axis_.back());
  const double d = std::clamp(v_device, device_axis_.front(), device_axis_.back());
  s.clamped = g != v_gate || d != v_device;
  const std::size_t gi = bracket(gate_axis_, g);
  const std::size_t di = bracket(device_axis_, d);
  const double tg = (g - gate_axis_[gi]) / (gate_axis_[gi + 1] - gate_axis_[gi]);
  const double td = (d - device_axis_[di]) / (device_axis_[di + 1] - device_axis_[di]);
  const double c00 = at(di, gi);
  const double c01 = at(di, gi + 1);
  const double c10 = at(di + 1, gi);
  const double c11 = at(di + 1, gi + 1);
  s.current = (1 - td) * ((1 - tg) * c00 + tg * c01) + td * ((1 - tg) * c10 + tg * c11);
  return s;
}

DeviceLut parse_device_lut(std::istream& in, std::string_view source) {
  std::string line;
  std::size_t row = 0;
  std::vector<double> gate_axis;
  std::vector<double> device_axis;
  std::vector<double> currents;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (gate_axis.empty()) {
      if (cells.size() < 3) {
        throw ParseError(std::string(source) + ": row " + std::to_string(row) +
                         ": header needs a label cell and at least two gate voltages");
      }
      for (std::size_t c = 1; c < cells.size(); ++c) {
        const double v = parse_number(cells[c], source, row, c + 1);
        if (!gate_axis.empty() && !(v > gate_axis.back())) {
          throw ParseError(std::string(source) + ": row " + std::to_string(row) + ", column " +
                           std::to_string(c + 1) + ": gate axis not strictly increasing");
        }
        gate_axis.push_back(v);
      }
      width = cells.size();
      continue;
    }
    if (cells.size() != width) {
      throw ParseError(std::string(source) + ": row " + std::to_string(row) + ": expected " +
                       std::to_string(width) + " cells, found " + std::to_string(cells.size()));
    }
    const double vd = parse_number(cells[0], source, row, 1);
    if (!device_axis.empty() && !(vd > device_axis.back())) {
      throw ParseError(std::string(source) + ": row " + std::to_string(row) +
                       ", column 1: device axis not strictly increasing");
    }
    device_axis.push_back(vd);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const double cur = parse_number(cells[c], source, row, c + 1);
      if (cur < 0.0) {
        throw ParseError(std::string(source) + ": row " + std::to_string(row) + ", column " +
                         std::to_string(c + 1) + ": negative current");
      }
      currents.push_back(cur);
    }
  }
  if (gate_axis.empty()) throw ParseError(std::string(source) + ": empty LUT");
  if (device_axis.size() < 2) {
    throw ParseError(std::string(source) + ": at least two device-voltage rows are required");
  }
  return DeviceLut(std::move(gate_axis), std::move(device_axis), std::move(currents));
}

DeviceLut load_device_lut(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open device LUT '" + path.string() + "'");
  return parse_device_lut(in, path.string());
}

void write_device_lut(std::ostream& out, const DeviceLut& lut) {
  out << std::setprecision(17) << "vd\\vg";
  for (double g : lut.gate_axis()) out << ',' << g;
  out << '\n';
  for (std::size_t d = 0; d < lut.device_axis().size(); ++d) {
    out << lut.device_axis()[d];
    for (std::size_t g = 0; g < lut.gate_axis().size(); ++g) out << ',' << lut.at(d, g);
    out << '\n';
  }
}

std::string_view to_string(DeviceKind kind) {
  switch (kind) {
    case DeviceKind::sram8t: return "sram8t";
    case DeviceKind::reram1t1r: return "reram1t1r";
    case DeviceKind::linear: return "linear";
  }
  return "?";
}

DeviceKind parse_device_kind(std::string_view text) {
  if (text == "sram8t") return DeviceKind::sram8t;
  if (text == "reram1t1r") return DeviceKind::reram1t1r;
  if (text == "linear") return DeviceKind::linear;
  throw ConfigError("unknown device kind '" + std::string(text) + "'");
}

DeviceModel DeviceModel::sram8t(double i_on) {
  DeviceModel m;
  m.kind = DeviceKind::sram8t;
  m.i_on = i_on;
  m.i_off = i_on / 2e4;
  m.i_hrs = m.i_off;
  return m;
}

DeviceModel DeviceModel::reram1t1r(double i_on, double i_hrs) {
  DeviceModel m;
  m.kind = DeviceKind::reram1t1r;
  m.i_on = i_on;
  m.i_hrs = i_hrs;
  m.i_off = 1e-11;
  return m;
}

DeviceModel DeviceModel::linear(double i_on, double i_hrs) {
  DeviceModel m;
  m.kind = DeviceKind::linear;
  m.i_on = i_on;
  m.i_hrs = i_hrs;
  m.i_off = 0.0;
  return m;
}

void DeviceModel::validate() const {
  if (!(i_on > i_hrs && i_hrs >= i_off && i_off >= 0.0)) {
    throw DomainError("device model: require i_on > i_hrs >= i_off >= 0");
  }
  if (!(v_nominal > 0.0) || !(v_knee > 0.0)) {
    throw DomainError("device model: v_nominal and v_knee must be > 0");
  }
}

double conduction_current(const DeviceModel& model, bool stored, bool gate_on, double v_cell) {
  const double sign = v_cell < 0.0 ? -1.0 : 1.0;
  const double v = std::abs(v_cell);
  const auto& lut = stored ? model.lut : model.lut_hrs;
  if (lut) return sign * lut->lookup(gate_on ? model.v_nominal : 0.0, v).current;
  if (!gate_on) return model.i_off;
  const double target = stored ? model.i_on : model.i_hrs;
  return sign * curve(target, v, model.v_nominal, model.v_knee, model.kind);
}

double cell_current(const DeviceModel& model, int stored_bit, int gate_on, double v_cell) {
  if (v_cell < 0.0) throw DomainError("cell_current: negative cell bias is not modeled");
  if ((stored_bit != 0 && stored_bit != 1) || (gate_on != 0 && gate_on != 1)) {
    throw DomainError("cell_current: stored bit and gate must be 0 or 1");
  }
  return conduction_current(model, stored_bit == 1, gate_on == 1, v_cell);
}

DeviceLut tabulate(const DeviceModel& model, bool stored, std::vector<double> gate_axis,
                   std::vector<double> device_axis) {
  DeviceModel parametric = model;
  parametric.lut.reset();
  parametric.lut_hrs.reset();
  std::vector<double> currents;
  currents.reserve(gate_axis.size() * device_axis.size());
  for (double vd : device_axis) {
    for (double vg : gate_axis) {
      const bool on = vg >= model.v_nominal;
      currents.push_back(conduction_current(parametric, stored, on, vd));
    }
  }
  return DeviceLut(std::move(gate_axis), std::move(device_axis), std::move(currents));
}

std::string_view to_string(MetalPreset preset) {
  switch (preset) {
    case MetalPreset::M3: return "M3";
    case MetalPreset::M4: return "M4";
    case MetalPreset::M6: return "M6";
    case MetalPreset::custom: return "custom";
  }
  return "?";
}

MetalPreset parse_metal_preset(std::string_view text) {
  if (text == "M3") return MetalPreset::M3;
  if (text == "M4") return MetalPreset::M4;
  if (text == "M6") return MetalPreset::M6;
  if (text == "custom") return MetalPreset::custom;
  throw ConfigError("unknown metal preset '" + std::string(text) + "'");
}

WireModel WireModel::from_preset(MetalPreset preset) {
  WireModel w;
  w.preset = preset;
  w.r_driver = 1000.0;
  w.r_sink = 1000.0;
  switch (preset) {
    case MetalPreset::M3: w.r_bl_per_cell = w.r_sl_per_cell = 40.0; break;
    case MetalPreset::M4: w.r_bl_per_cell = w.r_sl_per_cell = 25.0; break;
    case MetalPreset::M6: w.r_bl_per_cell = w.r_sl_per_cell = 8.0; break;
    case MetalPreset::custom: w.r_driver = w.r_sink = 0.0; break;
  }
  return w;
}

WireModel WireModel::ideal() { return WireModel{}; }

void WireModel::validate() const {
  if (r_bl_per_cell < 0.0 || r_sl_per_cell < 0.0 || r_driver < 0.0 || r_sink < 0.0) {
    throw DomainError("wire model: resistances must be >= 0");
  }
}

double wire_resistance_from_geometry(double res_per_um, double cell_height_um) {
  if (!(res_per_um > 0.0) || !(cell_height_um > 0.0)) {
    throw DomainError("wire_resistance_from_geometry: inputs must be > 0");
  }
  return res_per_um * cell_height_um;
}

WireModel wire_from_geometry(double res_per_um, double cell_height_um, double r_driver,
                             double r_sink) {
  WireModel w;
  w.preset = MetalPreset::custom;
  w.r_bl_per_cell = w.r_sl_per_cell = wire_resistance_from_geometry(res_per_um, cell_height_um);
  w.r_driver = r_driver;
  w.r_sink = r_sink;
  w.validate();
  return w;
}

}  // namespace xbsim::devices
