#pragma once

// Bitcell I-V models and parasitic wire models.
//
// Units: amperes, volts, ohms throughout.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace xbsim::devices {

// Current table over (gate voltage, device voltage) with bilinear
// interpolation. Queries outside the grid are clamped to its boundary and
// reported through Sample::clamped.
class DeviceLut {
 public:
  struct Sample {
    double current = 0.0;
    bool clamped = false;
  };

  // currents is indexed [device_index * gate_axis.size() + gate_index].
  DeviceLut(std::vector<double> gate_axis, std::vector<double> device_axis,
            std::vector<double> currents);

  Sample lookup(double v_gate, double v_device) const;

  const std::vector<double>& gate_axis() const { return gate_axis_; }
  const std::vector<double>& device_axis() const { return device_axis_; }
  double at(std::size_t device_index, std::size_t gate_index) const {
    return currents_[device_index * gate_axis_.size() + gate_index];
  }

 private:
  std::vector<double> gate_axis_;
  std::vector<double> device_axis_;
  std::vector<double> currents_;
};

// CSV layout: the header row holds the gate-voltage axis after one label
// cell; every following row starts with a device voltage and continues
// with currents in amperes. Errors carry the offending row/column.
DeviceLut parse_device_lut(std::istream& in, std::string_view source = "<stream>");
DeviceLut load_device_lut(const std::filesystem::path& path);
void write_device_lut(std::ostream& out, const DeviceLut& lut);

enum class DeviceKind { sram8t, reram1t1r, linear };

std::string_view to_string(DeviceKind kind);
DeviceKind parse_device_kind(std::string_view text);

struct DeviceModel {
  DeviceKind kind = DeviceKind::sram8t;
  double i_on = 1e-6;      // gate on, stored 1, at v_nominal
  double i_hrs = 5e-11;    // gate on, stored 0, at v_nominal
  double i_off = 5e-11;    // gate off, any bias
  double v_nominal = 0.7;
  double v_knee = 0.35;
  std::shared_ptr<const DeviceLut> lut;      // overrides the stored-1 branch
  std::shared_ptr<const DeviceLut> lut_hrs;  // overrides the stored-0 branch

  // 8T-SRAM: stored 0 conducts only leakage, i_on / i_off = 2e4.
  static DeviceModel sram8t(double i_on = 1e-6);
  // 1T-1ReRAM with a 0.1 uA HRS current.
  static DeviceModel reram1t1r(double i_on = 1e-6, double i_hrs = 1e-7);
  // Ohmic cell, I = (i_target / v_nominal) * v. No gate-off leakage.
  static DeviceModel linear(double i_on = 1e-6, double i_hrs = 0.0);

  // Throws DomainError when i_on > i_hrs >= i_off >= 0 or voltage
  // positivity is violated.
  void validate() const;
};

// Current through one bitcell. Gate off draws i_off regardless of bias;
// gate on follows the stored-state conduction curve. v_cell must be >= 0.
double cell_current(const DeviceModel& model, int stored_bit, int gate_on, double v_cell);

// Solver-side evaluation. Accepts negative bias (odd extension of the
// conduction curve) so that Newton iterates may overshoot.
double conduction_current(const DeviceModel& model, bool stored, bool gate_on, double v_cell);

// Samples the parametric model onto a LUT grid.
DeviceLut tabulate(const DeviceModel& model, bool stored, std::vector<double> gate_axis,
                   std::vector<double> device_axis);

enum class MetalPreset { M3, M4, M6, custom };

std::string_view to_string(MetalPreset preset);
MetalPreset parse_metal_preset(std::string_view text);

struct WireModel {
  double r_bl_per_cell = 0.0;
  double r_sl_per_cell = 0.0;
  double r_driver = 0.0;
  double r_sink = 0.0;  // cancelled by the op-amp virtual ground
  MetalPreset preset = MetalPreset::custom;

  // Stand-in magnitudes; only the ordering M3 > M4 > M6 is meaningful.
  static WireModel from_preset(MetalPreset preset);
  static WireModel ideal();

  void validate() const;
};

// Per-cell wire resistance from resistance per unit length and cell height.
double wire_resistance_from_geometry(double res_per_um, double cell_height_um);

WireModel wire_from_geometry(double res_per_um, double cell_height_um, double r_driver,
                             double r_sink);

}  // namespace xbsim::devices
