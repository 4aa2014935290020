#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "combtwin/fxp.hpp"
#include "combtwin/iq_stream.hpp"

namespace combtwin {

/// Quantized linear-phase FIR: odd length, symmetric taps.
struct FilterSpec {
  std::vector<std::int64_t> taps;
  FxpFormat coeff_format = FxpFormat{18, 16, Overflow::Saturate, Rounding::RoundHalfUp};
  std::string description;

  bool empty() const { return taps.empty(); }
  void validate(const std::string& name) const;
  std::vector<double> real_taps() const;

  friend bool operator==(const FilterSpec&, const FilterSpec&) = default;
};

/// Hamming-windowed sinc lowpass. `cutoff` is in cycles/sample; taps are scaled to `dc_gain`.
std::vector<double> design_windowed_sinc(int n_taps, double cutoff, double dc_gain);

FilterSpec quantize_filter(const std::vector<double>& taps, const FxpFormat& coeff_format, std::string description);

/// Reference interpolator: 63 taps, cutoff half the band rate, DC gain U, 18-bit coefficients.
FilterSpec default_interp_filter(int upsample);

/// Reference channelizer prototype: 127 taps, cutoff `cutoff` cycles/sample, unit DC gain, 18-bit coefficients.
FilterSpec default_channelizer_filter(double cutoff);

/// Complex e^{sign * j 2 pi step n / len} table, quantized to Q1.(coeff_bits-1) with round-half-up.
std::vector<CInt> make_rotation_lut(int len, std::int64_t step, int sign, int coeff_bits);

}  // namespace combtwin
