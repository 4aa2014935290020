#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "combtwin/cordic.hpp"
#include "combtwin/fir.hpp"
#include "combtwin/fxp.hpp"
#include "combtwin/iq_stream.hpp"

namespace combtwin {

/// Tone amplitudes are Q2.16 so that 1.0 is exactly representable.
inline FxpFormat amplitude_format() { return FxpFormat{18, 16, Overflow::Saturate, Rounding::RoundHalfUp}; }

struct ToneConfig {
  int band_index = 0;
  int tone_index = 0;
  std::int64_t freq_word = 0;  ///< k; tone frequency k * f_b / L_acc
  FxpValue amplitude_code{0, amplitude_format()};

  friend bool operator==(const ToneConfig&, const ToneConfig&) = default;
};

struct PhaseAccumulatorState {
  std::int64_t modulus = 65536;
  std::int64_t phase = 0;
  std::int64_t increment = 0;

  friend bool operator==(const PhaseAccumulatorState&, const PhaseAccumulatorState&) = default;
};

struct PhaseStep {
  PhaseAccumulatorState next;
  std::int64_t phase_out;  ///< pre-step phase
};

/// phase' = phase + increment, reduced by one conditional subtraction.
PhaseStep phase_acc_step(const PhaseAccumulatorState& s);

struct GeneratorConfig {
  int n_bands = 10;
  int tones_per_band = 40;
  std::int64_t l_acc = 65536;
  double band_rate_hz = 250e6;
  double band_spacing_hz = 100e6;
  int upsample = 8;
  int shifter_lut_len = 40;
  CordicConfig cordic;
  FilterSpec interp_filter;  ///< empty selects default_interp_filter(upsample)
  int tone_bits = 16;        ///< per-tone datapath, Q1.(tone_bits-1)
  int sum_width_bits = 0;    ///< 0: tone_bits + ceil(log2(tones_per_band))
  int lut_coeff_bits = 18;
  Rounding rounding = Rounding::TruncateTowardNegInf;

  /// Throws ConfigError naming the offending key.
  void validate() const;

  double full_rate_hz() const { return band_rate_hz * upsample; }
  double band_center_hz(int band) const { return band * band_spacing_hz + band_spacing_hz / 2; }
  /// 40-LUT step for band b: f_shift * lut_len / full_rate.
  std::int64_t band_shift_step(int band) const;
  /// Length of the band-rate LUT that moves a band by spacing/2 (5 for the reference chain).
  int down_shift_lut_len() const;

  FilterSpec effective_interp_filter() const;
  FxpFormat tone_format() const;
  FxpFormat band_format() const;
  FxpFormat wideband_format() const;

  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

/// Throws ConfigError for tones outside the band/tone grid or with words >= L_acc.
void validate_tones(const GeneratorConfig& cfg, const std::vector<ToneConfig>& tones);

/// lcm(L_acc * U, lut_len): steady-state period of the wideband comb.
std::int64_t waveform_period(std::int64_t l_acc, std::int64_t upsample, std::int64_t lut_len);

/// Periodic complex LUT multiplier. Keeps its table position across calls.
class LutMixer {
 public:
  LutMixer(std::vector<CInt> lut, int coeff_frac, const FxpFormat& out);

  void process(std::span<CInt> data);
  void reset() { pos_ = 0; }

 private:
  std::vector<CInt> lut_;
  int shift_;
  FxpFormat out_;
  std::size_t pos_ = 0;
};

/// Zero-stuff by U and filter; only the non-zero input phases are multiplied.
class Interpolator {
 public:
  Interpolator(const FilterSpec& filter, int upsample, const FxpFormat& out);

  /// Appends in.size() * U samples to `out`.
  void process(std::span<const CInt> in, std::vector<CInt>& out);

 private:
  int up_;
  int depth_;  ///< inputs spanned by one polyphase branch
  std::vector<std::vector<std::int64_t>> branches_;
  FxpFormat out_;
  int shift_;
  std::vector<CInt> hist_;  ///< last depth_-1 inputs, oldest first
};

/// Per-tone phase accumulator + CORDIC + amplitude scaling.
class ToneSource {
 public:
  ToneSource(const ToneConfig& tone, const GeneratorConfig& cfg, std::shared_ptr<const CordicTable> table);

  /// Adds this tone's next out.size() samples into `acc`.
  void accumulate(std::span<std::int64_t> acc_i, std::span<std::int64_t> acc_q);
  void generate(std::span<CInt> out);

 private:
  std::shared_ptr<const CordicTable> table_;
  PhaseAccumulatorState state_;
  std::int64_t amp_;
  int shift_;
  FxpFormat out_;
};

/// One band of the exciter: tone sum, down-shift, interpolation, band shift.
class BandGenerator {
 public:
  BandGenerator(const GeneratorConfig& cfg, int band, const std::vector<ToneConfig>& tones,
                std::shared_ptr<const CordicTable> table);

  /// Replaces `out` with the next n_band_samples * U full-rate samples.
  void produce(std::size_t n_band_samples, std::vector<CInt>& out);

 private:
  FxpFormat band_format_;
  std::vector<ToneSource> tones_;
  LutMixer down_;
  Interpolator interp_;
  LutMixer shift_;
  std::vector<std::int64_t> acc_i_, acc_q_;
  std::vector<CInt> band_;
};

/// Whole exciter. Bands run independently and are summed in band order.
class CombGenerator {
 public:
  CombGenerator(const GeneratorConfig& cfg, const std::vector<ToneConfig>& tones);

  /// Replaces `wideband` with the next n_band_samples * U samples.
  void produce(std::size_t n_band_samples, std::vector<CInt>& wideband, int threads = 1);

  const GeneratorConfig& config() const { return cfg_; }
  std::shared_ptr<const CordicTable> cordic_table() const { return table_; }
  FxpFormat output_format() const { return cfg_.wideband_format(); }

 private:
  GeneratorConfig cfg_;
  std::shared_ptr<const CordicTable> table_;
  std::vector<BandGenerator> bands_;
  std::vector<std::vector<CInt>> scratch_;
};

// Whole-stream forms of each stage, built on the streaming blocks above.
IqStream tone_generate(const ToneConfig& tone, const GeneratorConfig& cfg, std::size_t n_samples);
IqStream band_sum(const std::vector<IqStream>& tones, int sum_width_bits = 0);
IqStream down_shift(const IqStream& band, const GeneratorConfig& cfg);
IqStream upsample_interp(const IqStream& band, const GeneratorConfig& cfg);
IqStream band_shift(const IqStream& band, int band_index, const GeneratorConfig& cfg);
IqStream band_add(const std::vector<IqStream>& bands);
IqStream generate_wideband(const GeneratorConfig& cfg, const std::vector<ToneConfig>& tones,
                           std::size_t n_band_samples, int threads = 1);

}  // namespace combtwin
