#include "combtwin/fir.hpp"

#include <cmath>
#include <numbers>

namespace combtwin {

void FilterSpec::validate(const std::string& name) const {
  coeff_format.validate();
  if (taps.empty() || taps.size() % 2 == 0) {
    throw ConfigError(name + " must have an odd, non-zero number of taps (got " + std::to_string(taps.size()) + ")");
  }
  for (std::size_t k = 0; k < taps.size(); ++k) {
    if (taps[k] != taps[taps.size() - 1 - k]) throw ConfigError(name + " taps must be symmetric (linear phase)");
    if (!coeff_format.contains(taps[k])) throw ConfigError(name + " tap " + std::to_string(k) + " exceeds coeff format");
  }
}

std::vector<double> FilterSpec::real_taps() const {
  std::vector<double> out(taps.size());
  for (std::size_t k = 0; k < taps.size(); ++k) out[k] = std::ldexp(static_cast<double>(taps[k]), -coeff_format.frac_bits);
  return out;
}

std::vector<double> design_windowed_sinc(int n_taps, double cutoff, double dc_gain) {
  if (n_taps < 1 || n_taps % 2 == 0) throw ConfigError("windowed-sinc length must be odd");
  if (!(cutoff > 0.0 && cutoff < 0.5)) throw ConfigError("windowed-sinc cutoff must be in (0, 0.5) cycles/sample");
  const int mid = (n_taps - 1) / 2;
  std::vector<double> h(static_cast<std::size_t>(n_taps));
  double sum = 0.0;
  for (int k = 0; k < n_taps; ++k) {
    const double t = k - mid;
    const double sinc = t == 0 ? 2.0 * cutoff : std::sin(2.0 * std::numbers::pi * cutoff * t) / (std::numbers::pi * t);
    const double w = n_taps == 1 ? 1.0 : 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * k / (n_taps - 1));
    h[static_cast<std::size_t>(k)] = sinc * w;
    sum += sinc * w;
  }
  for (auto& v : h) v *= dc_gain / sum;
  // Enforce exact symmetry against rounding in the window evaluation.
  for (int k = 0; k < mid; ++k) {
    const double avg = 0.5 * (h[static_cast<std::size_t>(k)] + h[static_cast<std::size_t>(n_taps - 1 - k)]);
    h[static_cast<std::size_t>(k)] = h[static_cast<std::size_t>(n_taps - 1 - k)] = avg;
  }
  return h;
}

FilterSpec quantize_filter(const std::vector<double>& taps, const FxpFormat& coeff_format, std::string description) {
  FilterSpec f;
  f.coeff_format = coeff_format;
  f.coeff_format.rounding = Rounding::RoundHalfUp;
  f.description = std::move(description);
  f.taps.reserve(taps.size());
  for (double v : taps) f.taps.push_back(FxpValue::quantize(v, f.coeff_format).raw());
  return f;
}

FilterSpec default_interp_filter(int upsample) {
  if (upsample < 1) throw ConfigError("upsample factor must be >= 1");
  const double cutoff = 0.5 / upsample;
  return quantize_filter(design_windowed_sinc(63, cutoff, upsample), FxpFormat::make(18, 16),
                         "windowed-sinc interpolator: 63 taps, Hamming, cutoff band_rate/2, DC gain U, Q2.16");
}

FilterSpec default_channelizer_filter(double cutoff) {
  return quantize_filter(design_windowed_sinc(127, cutoff, 1.0), FxpFormat::make(18, 16),
                         "windowed-sinc channelizer prototype: 127 taps, Hamming, cutoff +-spacing/2, unit DC gain, Q2.16");
}

std::vector<CInt> make_rotation_lut(int len, std::int64_t step, int sign, int coeff_bits) {
  if (len < 1) throw ConfigError("rotation LUT length must be >= 1");
  const double full_scale = std::ldexp(1.0, coeff_bits - 1) - 1.0;
  std::vector<CInt> lut(static_cast<std::size_t>(len));
  for (int n = 0; n < len; ++n) {
    // Reduce the angle exactly in integers before going to floating point.
    const std::int64_t idx = ((step * n) % len + len) % len;
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(idx) / len;
    lut[static_cast<std::size_t>(n)] = {std::llround(std::cos(theta) * full_scale),
                                        sign * std::llround(std::sin(theta) * full_scale)};
  }
  return lut;
}

}  // namespace combtwin
