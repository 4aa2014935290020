#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "combtwin/comb_analyzer.hpp"
#include "combtwin/fft.hpp"

namespace combtwin {

enum class SpectrumUnits { PerHz, DbcPerHz, DbFs };
enum class Window { Rect, Hann };
enum class PsdMethod { Periodogram, Welch };

std::string to_string(SpectrumUnits u);
std::string to_string(Window w);
std::string to_string(PsdMethod m);

struct PsdOptions {
  PsdMethod method = PsdMethod::Welch;
  Window window = Window::Hann;
  std::size_t segment_len = 0;  ///< Welch only; 0 selects N/8
  double overlap = 0.5;         ///< Welch only, fraction of segment_len
};

/// One-sided spectrum, n_points/2 + 1 bins spaced bin_hz apart.
struct Spectrum {
  std::size_t n_points = 0;  ///< transform length (the segment length for Welch)
  double bin_hz = 0.0;
  std::vector<double> values;
  SpectrumUnits units = SpectrumUnits::PerHz;
  Window window = Window::Rect;
  PsdMethod method = PsdMethod::Periodogram;
  std::size_t segment_len = 0;
  double overlap = 0.0;
  std::size_t n_segments = 1;

  double freq(std::size_t bin) const { return bin_hz * static_cast<double>(bin); }
};

/// Density in units^2/Hz. Throws ConfigError when x is shorter than one segment or the length is not 2^a * 5^b.
Spectrum psd(std::span<const double> x, double fs, const PsdOptions& opt = {});

struct AmpPhase {
  std::vector<double> amp;
  std::vector<double> phase;    ///< unwrapped, rad
  std::vector<double> d_amp;    ///< amp / mean(amp) - 1
  std::vector<double> amp_fluct;  ///< amp - mean(amp)
  std::vector<double> d_phase;  ///< phase - mean(phase)
  double mean_amp = 0.0;
};

/// Throws ConfigError on an empty series or zero mean amplitude.
AmpPhase amp_phase(const IqTimeSeries& series);
AmpPhase amp_phase(std::span<const cplx> iq);

/// 10 log10(values / carrier_power). Zero densities map to -3000 dB rather than -inf.
Spectrum dbc_per_hz(const Spectrum& spec, double carrier_power);

struct SinadSfdr {
  double sinad_db = 0.0;
  double sfdr_db = 0.0;
};

/// Coherent real capture; DC excluded from both the noise set and the spur search.
SinadSfdr sinad_sfdr(std::span<const double> tone_wave, std::size_t fundamental_bin);

struct PredictedSpur {
  double freq_hz = 0.0;
  double attenuation_db = 0.0;  ///< boxcar loss of the strongest contributing residual line
  std::int64_t alias_num = 0;   ///< alias at fs * alias_num / residual_period
  std::int64_t residual_period = 0;
  std::string origin;
};

/// Residual band-rate period R = lcm(L_acc*U, lut)/U; each off-boxcar-grid line j*f_b/R aliases to
/// (j*L_avg mod R)/R * fs, folded into [0, fs/2].
std::vector<PredictedSpur> predict_spurs(std::int64_t l_acc, std::int64_t upsample, std::int64_t lut_len,
                                         std::int64_t l_avg, double band_rate_hz);

struct SpurLine {
  double freq_hz = 0.0;
  double level_dbc = 0.0;  ///< power in the bin relative to carrier
  std::size_t bin = 0;
};

struct SpurReport {
  std::vector<SpurLine> lines;
  double floor_dbc_per_hz = 0.0;
  std::vector<PredictedSpur> predicted;
};

struct DetectOptions {
  double threshold_db = 10.0;
  /// Per-bin power (dBc) below which the floor is treated as arithmetic round-off.
  double arithmetic_floor_dbc = -280.0;
};

/// Local maxima above max(median, arithmetic floor) + threshold. Expects a DbcPerHz spectrum; DC bin ignored.
SpurReport detect_spurs(const Spectrum& spec, const DetectOptions& opt = {});

struct DeglitchResult {
  std::vector<double> values;
  std::size_t n_replaced = 0;
};

/// Single-pass mu +- 5 sigma replacement with uniform draws in [mu - sigma, mu + sigma] (mt19937_64).
DeglitchResult deglitch(std::span<const double> x, std::uint64_t seed);

/// CSV with '#' metadata (method, window, units, bin_hz, config hash), then freq_hz,value.
void write_spectrum_csv(const Spectrum& spec, const std::filesystem::path& path, const std::string& config_hash);

}  // namespace combtwin
