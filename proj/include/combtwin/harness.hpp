#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "combtwin/config.hpp"
#include "combtwin/fft.hpp"

namespace combtwin {

struct ToneResult {
  IqTimeSeries series;             ///< fixed-point boxcar sums (metadata only for the float model)
  std::vector<cplx> float_series;  ///< float model output; empty for the fixed-point twin
  double carrier_power = 0.0;      ///< mean(amp)^2 in series units
  Spectrum amp_psd;                ///< dBc/Hz; empty when the tone has zero amplitude
  Spectrum phase_psd;              ///< rad^2/Hz in dB
  SpurReport amp_spurs;
  SpurReport phase_spurs;
};

struct RunCounters {
  double wall_s = 0.0;
  std::uint64_t full_rate_samples = 0;  ///< wideband samples generated
  double samples_per_s = 0.0;
  int threads = 1;
};

struct RunResult {
  std::string scenario;
  std::string config_hash;
  ChainConfig config;
  bool float_model = false;
  std::vector<ToneResult> tones;  ///< band-major, tone-minor
  std::vector<PredictedSpur> predicted;
  RunCounters counters;
};

struct RunOptions {
  int threads = 1;
  bool long_run = false;               ///< required for full_scale configs
  std::size_t chunk_band_samples = 0;  ///< streaming block; 0 picks a size. Never changes results.
};

/// Setup 1: wideband generator output fed straight into the analyzer.
RunResult run_loopback(const ChainConfig& cfg, const RunOptions& opt = {});

struct FloatOracleOptions {
  bool quantize_interp = false;  ///< use the 18-bit interpolator taps, everything else ideal
};

/// Same topology in double precision with exact sinusoids and ideal LUTs.
RunResult float_oracle(const ChainConfig& cfg, const FloatOracleOptions& fopt = {}, const RunOptions& opt = {});

struct SweepRow {
  int bits = 0;
  int iterations = 0;
  double sinad_db = 0.0;
  double sfdr_db = 0.0;
};

/// One coherent full-period capture of the raw CORDIC I output per (b, n), using tones[0].freq_word
/// and generator.l_acc. Combinations with n > angle_bits are skipped.
std::vector<SweepRow> run_cordic_sweep(const std::vector<int>& bits, const std::vector<int>& iters,
                                       const ChainConfig& base);

struct DemodModeStats {
  cplx single_mean;            ///< mean boxcar output, target tone alone
  cplx two_tone_mean;          ///< same with the interferer present
  double post_residual_db = 0.0;   ///< max non-DC PSD bin over floor, two-tone output
  double dc_leakage_db = 0.0;      ///< 20 log10 |two - single| / |single|
  std::size_t pre_lines = 0;       ///< mixer-product lines within line_range_db of the strongest
  std::size_t post_lines = 0;      ///< detected lines in the two-tone accumulated output
};

struct DemodCompare {
  std::string config_hash;
  int band = 0;
  std::int64_t target_word = 0;
  std::int64_t interferer_word = 0;
  double reference_rms = 0.0;       ///< CORDIC reference magnitude used to normalize the sine DDC
  double magnitude_ratio = 0.0;     ///< |square| / (|sine| / reference_rms)
  double phase_diff_rad = 0.0;
  double line_range_db = 60.0;
  DemodModeStats sine;
  DemodModeStats square;
};

/// tones[0] is the target f1; the remaining tones of its band form the interferer set (f2).
DemodCompare run_demod_compare(const ChainConfig& cfg, const RunOptions& opt = {});

struct Manifest {
  std::filesystem::path dir;
  std::vector<std::string> files;  ///< payload files relative to dir
  std::string config_hash;
};

/// Writes into `<out>/<scenario>.partial/` then renames to `<out>/<scenario>/`; manifest.json last.
/// run_stats.json (timing) is the only payload that varies between reruns.
Manifest persist(const RunResult& result, const std::filesystem::path& out_dir);
Manifest persist_sweep(const std::vector<SweepRow>& rows, const ChainConfig& cfg, const std::filesystem::path& out_dir);
Manifest persist_compare(const DemodCompare& cmp, const ChainConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace combtwin
