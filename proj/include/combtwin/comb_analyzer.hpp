#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "combtwin/comb_generator.hpp"

namespace combtwin {

enum class DemodMode { SineDdc, SquareWave };

std::string to_string(DemodMode m);
/// Accepts "sine"/"SineDdc" and "square"/"SquareWave".
DemodMode parse_demod_mode(const std::string& s);

struct AnalyzerConfig {
  FilterSpec channelizer_filter;  ///< empty selects the 127-tap default for the generator geometry
  int decim = 8;                  ///< must equal generator.upsample
  std::int64_t l_avg = 65536;
  DemodMode demod_mode = DemodMode::SineDdc;
  int accumulator_width_bits = 64;
  bool polyphase = true;  ///< decimating realization; bit-identical to the reference path

  /// Throws ConfigError naming the offending key.
  void validate(const GeneratorConfig& gen) const;
  FilterSpec effective_channelizer_filter(const GeneratorConfig& gen) const;
  /// Bits needed by the boxcar for this generator datapath and CORDIC width.
  int required_accumulator_bits(const GeneratorConfig& gen) const;

  friend bool operator==(const AnalyzerConfig&, const AnalyzerConfig&) = default;
};

/// Decimated per-tone output. Samples are undivided boxcar sums with `frac_bits` fractional bits.
struct IqTimeSeries {
  int band_index = 0;
  int tone_index = 0;
  std::int64_t freq_word = 0;
  std::int64_t l_avg = 0;
  double rate_hz = 0.0;
  DemodMode mode = DemodMode::SineDdc;
  int frac_bits = 0;
  std::vector<CInt> samples;
  std::int64_t discarded_samples = 0;  ///< inputs in a trailing partial window

  friend bool operator==(const IqTimeSeries&, const IqTimeSeries&) = default;
};

/// Conjugate band mix, lowpass, decimate by D, re-shift by +spacing/2. Stateful across calls.
class Channelizer {
 public:
  Channelizer(const GeneratorConfig& gen, const AnalyzerConfig& an, int band, const FxpFormat& in_format,
              bool polyphase);

  /// Appends one output per D inputs (decimation phase counted from the first sample ever seen).
  void process(std::span<const CInt> wideband, std::vector<CInt>& out);

  const FxpFormat& output_format() const { return fmt_; }

 private:
  void filter_reference(const std::vector<CInt>& buf, std::size_t n_new, std::vector<CInt>& out);
  void filter_polyphase(const std::vector<CInt>& buf, std::size_t n_new, std::vector<CInt>& out);

  FxpFormat fmt_;
  bool polyphase_;
  int decim_;
  LutMixer mix_;
  LutMixer reshift_;
  std::vector<std::int64_t> taps_;
  std::vector<std::vector<std::int64_t>> branches_;  ///< branches_[p][m] = h[m*D + p]
  int shift_;
  std::vector<CInt> hist_;
  std::vector<CInt> mixed_;
  std::uint64_t seen_ = 0;
};

/// Per-tone DDC (sine or square) with an L_avg accumulate-and-dump.
class ToneAnalyzer {
 public:
  ToneAnalyzer(const ToneConfig& tone, const GeneratorConfig& gen, const AnalyzerConfig& an,
               const FxpFormat& in_format, std::shared_ptr<const CordicTable> table);

  void process(std::span<const CInt> subband);
  /// Returns the series so far; the partial window is reported as discarded.
  IqTimeSeries finish() const;
  /// Drops emitted samples (used to discard warm-up windows).
  void clear_output() { series_.samples.clear(); }

 private:
  std::shared_ptr<const CordicTable> table_;
  IqTimeSeries series_;
  std::int64_t modulus_;
  std::int64_t phase_ = 0;
  std::int64_t acc_i_ = 0, acc_q_ = 0;
  std::int64_t count_ = 0;
};

/// All bands and tones of the analysis path.
class CombAnalyzer {
 public:
  CombAnalyzer(const GeneratorConfig& gen, const AnalyzerConfig& an, const std::vector<ToneConfig>& tones,
               std::shared_ptr<const CordicTable> table);

  void process(std::span<const CInt> wideband, int threads = 1);
  void clear_output();
  /// Band-major, tone-minor order.
  std::vector<IqTimeSeries> finish() const;

 private:
  struct Band {
    Channelizer chan;
    std::vector<ToneAnalyzer> tones;
    std::vector<CInt> sub;
  };
  std::vector<Band> bands_;
};

/// Normative shift-filter-decimate path.
IqStream channelize(const IqStream& wideband, int band_index, const GeneratorConfig& gen, const AnalyzerConfig& an);
/// Decimating realization; equal to channelize() bit for bit.
IqStream channelize_polyphase(const IqStream& wideband, int band_index, const GeneratorConfig& gen,
                              const AnalyzerConfig& an);

/// Raw CORDIC output for a tone word: the DDC reference.
IqStream reference_stream(std::int64_t freq_word, const GeneratorConfig& gen, std::size_t n_samples);

/// Pre-accumulation mixer products subband * conj(ref) (sine) or subband * conj(sign ref) (square).
std::vector<CInt> demodulate(const IqStream& subband, const IqStream& reference, DemodMode mode);

IqTimeSeries ddc_sine(const IqStream& subband, const IqStream& reference, std::int64_t l_avg);
IqTimeSeries ddc_square(const IqStream& subband, const IqStream& reference, std::int64_t l_avg);

/// |sum_{n<L} e^{j 2 pi f n}| / L.
double boxcar_response(std::int64_t L, double f_norm);

// Series export. CSV: '#' key=value metadata lines, then "index,i,q" rows.
// Binary: one length-prefixed little-endian record per series (layout in README).
void write_series_csv(const IqTimeSeries& s, const std::filesystem::path& path);
IqTimeSeries read_series_csv(const std::filesystem::path& path);
void write_series_binary(const std::vector<IqTimeSeries>& series, const std::filesystem::path& path);
std::vector<IqTimeSeries> read_series_binary(const std::filesystem::path& path);

}  // namespace combtwin
