#pragma once

// Op-amp current sensing, dummy-column HRS compensation and ADC
// quantization of column currents into digital partial sums.

#include <cstdint>
#include <string_view>

namespace xbsim::readout {

struct AdcModel {
  int bits = 6;
  double quantum = 1e-6;  // A per level; level k corresponds to partial sum k
  double offset = 0.0;

  std::int64_t levels() const { return std::int64_t{1} << bits; }
  std::int64_t max_level() const { return levels() - 1; }
  void validate() const;
};

struct Quantized {
  std::int64_t level = 0;
  bool clamped = false;
};

// level = clamp(round((i - offset) / quantum), 0, 2^bits - 1), ties to even.
Quantized adc_quantize(double current, const AdcModel& adc);

// ADC width that digitizes every sum 0..n without saturation.
int full_precision_bits(std::size_t n);

enum class DummyDomain { analog, digital };

std::string_view to_string(DummyDomain domain);
DummyDomain parse_dummy_domain(std::string_view text);

struct DummyColumnConfig {
  bool enabled = false;
  DummyDomain domain = DummyDomain::analog;
};

// Subtracts the all-HRS reference column current, floored at 0.
double dummy_compensate(double i_data, double i_dummy);

}  // namespace xbsim::readout
