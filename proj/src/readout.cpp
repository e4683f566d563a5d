#include "xbsim/readout.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "xbsim/error.hpp"

namespace xbsim::readout {

void AdcModel::validate() const {
  if (bits < 1 || bits > 30) throw ConfigError("adc: bits must be in [1, 30]");
  if (!(quantum > 0.0)) throw ConfigError("adc: quantum must be > 0");
  if (!std::isfinite(offset)) throw ConfigError("adc: offset must be finite");
}

Quantized adc_quantize(double current, const AdcModel& adc) {
  Quantized q;
  // std::nearbyint honours the default round-to-nearest-even mode.
  const double level = std::nearbyint((current - adc.offset) / adc.quantum);
  if (level < 0.0) {
    q.level = 0;
    q.clamped = true;
  } else if (level > static_cast<double>(adc.max_level())) {
    q.level = adc.max_level();
    q.clamped = true;
  } else {
    q.level = static_cast<std::int64_t>(level);
  }
  return q;
}

int full_precision_bits(std::size_t n) { return std::max(1, static_cast<int>(std::bit_width(n))); }

std::string_view to_string(DummyDomain domain) {
  return domain == DummyDomain::analog ? "analog" : "digital";
}

DummyDomain parse_dummy_domain(std::string_view text) {
  if (text == "analog") return DummyDomain::analog;
  if (text == "digital") return DummyDomain::digital;
  throw ConfigError("unknown dummy domain '" + std::string(text) + "'");
}

double dummy_compensate(double i_data, double i_dummy) { return std::max(0.0, i_data - i_dummy); }

}  // namespace xbsim::readout
