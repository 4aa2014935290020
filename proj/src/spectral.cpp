#include "combtwin/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

#include "combtwin/fft.hpp"

namespace combtwin {

std::string to_string(SpectrumUnits u) {
  switch (u) {
    case SpectrumUnits::PerHz: return "PerHz";
    case SpectrumUnits::DbcPerHz: return "DbcPerHz";
    default: return "DbFs";
  }
}

std::string to_string(Window w) { return w == Window::Rect ? "Rect" : "Hann"; }
std::string to_string(PsdMethod m) { return m == PsdMethod::Periodogram ? "Periodogram" : "Welch"; }

Spectrum psd(std::span<const double> x, double fs, const PsdOptions& opt) {
  if (fs <= 0) throw ConfigError("psd: sample rate must be > 0");
  const std::size_t n = x.size();
  std::size_t seg = n;
  std::size_t step = n;
  if (opt.method == PsdMethod::Welch) {
    seg = opt.segment_len ? opt.segment_len : n / 8;
    if (!(opt.overlap >= 0.0 && opt.overlap < 1.0)) throw ConfigError("psd: overlap must be in [0, 1)");
    step = seg - static_cast<std::size_t>(std::llround(static_cast<double>(seg) * opt.overlap));
    if (step == 0) step = 1;
  }
  if (seg < 2 || n < seg) {
    throw ConfigError("psd: input of " + std::to_string(n) + " samples is too short for segment length " +
                      std::to_string(seg));
  }
  const FftPlan plan(seg, false);

  std::vector<double> w(seg, 1.0);
  if (opt.window == Window::Hann) {
    for (std::size_t k = 0; k < seg; ++k) {
      w[k] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(seg));
    }
  }
  const double wpow = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);

  const std::size_t n_bins = seg / 2 + 1;
  std::vector<double> acc(n_bins, 0.0);
  std::vector<cplx> in(seg), out(seg);
  std::size_t n_seg = 0;
  for (std::size_t start = 0; start + seg <= n; start += step, ++n_seg) {
    for (std::size_t k = 0; k < seg; ++k) in[k] = x[start + k] * w[k];
    plan.execute(in.data(), out.data());
    for (std::size_t k = 0; k < n_bins; ++k) acc[k] += std::norm(out[k]);
  }

  Spectrum s;
  s.n_points = seg;
  s.bin_hz = fs / static_cast<double>(seg);
  s.units = SpectrumUnits::PerHz;
  s.window = opt.window;
  s.method = opt.method;
  s.segment_len = seg;
  s.overlap = opt.method == PsdMethod::Welch ? opt.overlap : 0.0;
  s.n_segments = n_seg;
  s.values.resize(n_bins);
  const double scale = 1.0 / (static_cast<double>(n_seg) * fs * wpow);
  for (std::size_t k = 0; k < n_bins; ++k) {
    const bool single = k == 0 || (seg % 2 == 0 && k == seg / 2);
    s.values[k] = acc[k] * scale * (single ? 1.0 : 2.0);
  }
  return s;
}

namespace {

// Mean removal anchored on the first sample, so an exactly constant input comes out exactly zero.
std::vector<double> centered(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  double m = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    out[k] = v[k] - v[0];
    m += out[k];
  }
  m /= static_cast<double>(v.size());
  for (auto& x : out) x -= m;
  return out;
}

}  // namespace

AmpPhase amp_phase(const IqTimeSeries& series) {
  std::vector<cplx> iq(series.samples.size());
  for (std::size_t k = 0; k < iq.size(); ++k) {
    iq[k] = {static_cast<double>(series.samples[k].i), static_cast<double>(series.samples[k].q)};
  }
  return amp_phase(iq);
}

AmpPhase amp_phase(std::span<const cplx> iq) {
  if (iq.empty()) throw ConfigError("amp_phase: empty series");
  AmpPhase r;
  const std::size_t n = iq.size();
  r.amp.resize(n);
  r.phase.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    r.amp[k] = std::abs(iq[k]);
    r.phase[k] = std::arg(iq[k]);
  }
  for (std::size_t k = 1; k < n; ++k) {
    double d = r.phase[k] - r.phase[k - 1];
    while (d > std::numbers::pi) {
      r.phase[k] -= 2 * std::numbers::pi;
      d -= 2 * std::numbers::pi;
    }
    while (d < -std::numbers::pi) {
      r.phase[k] += 2 * std::numbers::pi;
      d += 2 * std::numbers::pi;
    }
  }
  r.mean_amp = std::accumulate(r.amp.begin(), r.amp.end(), 0.0) / static_cast<double>(n);
  if (r.mean_amp == 0.0) throw ConfigError("amp_phase: degenerate input, mean amplitude is zero");
  r.d_amp.resize(n);
  for (std::size_t k = 0; k < n; ++k) r.d_amp[k] = r.amp[k] / r.mean_amp - 1.0;
  r.amp_fluct = centered(r.amp);
  r.d_phase = centered(r.phase);
  return r;
}

Spectrum dbc_per_hz(const Spectrum& spec, double carrier_power) {
  if (!(carrier_power > 0)) throw ConfigError("dbc_per_hz: carrier power must be > 0");
  if (spec.units != SpectrumUnits::PerHz) throw ConfigError("dbc_per_hz: input must be a linear density");
  Spectrum out = spec;
  out.units = SpectrumUnits::DbcPerHz;
  for (auto& v : out.values) v = v > 0 ? 10.0 * std::log10(v / carrier_power) : -3000.0;
  return out;
}

SinadSfdr sinad_sfdr(std::span<const double> tone_wave, std::size_t fundamental_bin) {
  const std::size_t n = tone_wave.size();
  if (n < 4) throw ConfigError("sinad_sfdr: capture too short");
  std::vector<cplx> in(tone_wave.begin(), tone_wave.end());
  const std::vector<cplx> X = fft(in);
  const std::size_t half = n / 2;
  if (fundamental_bin == 0 || fundamental_bin > half) throw ConfigError("sinad_sfdr: fundamental bin out of range");
  auto power = [&](std::size_t k) { return std::norm(X[k]) * ((n % 2 == 0 && k == half) ? 1.0 : 2.0); };
  const double pf = power(fundamental_bin);
  if (!(pf > 0)) throw ConfigError("sinad_sfdr: fundamental bin is empty");
  double rest = 0.0, worst = 0.0;
  for (std::size_t k = 1; k <= half; ++k) {
    if (k == fundamental_bin) continue;
    const double p = power(k);
    rest += p;
    worst = std::max(worst, p);
  }
  return {10.0 * std::log10(pf / rest), 10.0 * std::log10(pf / worst)};
}

std::vector<PredictedSpur> predict_spurs(std::int64_t l_acc, std::int64_t upsample, std::int64_t lut_len,
                                         std::int64_t l_avg, double band_rate_hz) {
  if (l_acc < 1 || upsample < 1 || lut_len < 1 || l_avg < 1) throw ConfigError("predict_spurs: inputs must be >= 1");
  const std::int64_t R = std::lcm(l_acc * upsample, lut_len) / upsample;
  const double fs = band_rate_hz / static_cast<double>(l_avg);
  const std::int64_t step = l_avg % R;
  std::map<std::int64_t, PredictedSpur> by_alias;
  std::int64_t a = 0;
  for (std::int64_t j = 1; j < R; ++j) {
    a += step;
    if (a >= R) a -= R;
    if (a == 0) continue;  // on the boxcar's zero grid
    const std::int64_t folded = std::min(a, R - a);
    const double resp = boxcar_response(l_avg, static_cast<double>(j) / static_cast<double>(R));
    const double att = resp > 0 ? -20.0 * std::log10(resp) : 3000.0;
    auto [it, fresh] = by_alias.try_emplace(folded);
    if (fresh || att < it->second.attenuation_db) {
      it->second = {fs * static_cast<double>(folded) / static_cast<double>(R), att, folded, R,
                    "period extension x" + std::to_string(R / l_acc) + ", residual j=" + std::to_string(j)};
    }
  }
  std::vector<PredictedSpur> out;
  for (auto& [k, v] : by_alias) out.push_back(v);
  return out;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace

SpurReport detect_spurs(const Spectrum& spec, const DetectOptions& opt) {
  if (!(opt.threshold_db > 0)) throw ConfigError("detect_spurs: threshold_db must be > 0");
  std::vector<double> v = spec.values;
  if (spec.units == SpectrumUnits::PerHz) {
    for (auto& x : v) x = x > 0 ? 10.0 * std::log10(x) : -3000.0;
  }
  SpurReport r;
  if (v.size() < 2) return r;
  const std::vector<double> body(v.begin() + 1, v.end());
  const double arith = opt.arithmetic_floor_dbc - 10.0 * std::log10(spec.bin_hz);
  const double floor = std::max(median(body), arith);
  const double level = floor + opt.threshold_db;
  std::vector<bool> is_line(v.size(), false);
  for (std::size_t k = 1; k < v.size(); ++k) {
    const bool rising = k == 1 || v[k] > v[k - 1];
    const bool peak = k + 1 == v.size() || v[k] >= v[k + 1];
    if (rising && peak && v[k] > level) {
      r.lines.push_back({spec.freq(k), v[k] + 10.0 * std::log10(spec.bin_hz), k});
      is_line[k] = true;
    }
  }
  std::vector<double> rest;
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (!is_line[k]) rest.push_back(v[k]);
  }
  r.floor_dbc_per_hz = rest.empty() ? floor : median(rest);
  return r;
}

DeglitchResult deglitch(std::span<const double> x, std::uint64_t seed) {
  if (x.size() < 2) throw ConfigError("deglitch: need at least 2 samples");
  const double n = static_cast<double>(x.size());
  const double mu = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mu) * (v - mu);
  const double sigma = std::sqrt(ss / n);
  DeglitchResult r{std::vector<double>(x.begin(), x.end()), 0};
  if (sigma == 0.0) return r;
  std::mt19937_64 rng(seed);
  for (auto& v : r.values) {
    if (std::abs(v - mu) > 5.0 * sigma) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      v = mu - sigma + 2.0 * sigma * u;
      ++r.n_replaced;
    }
  }
  return r;
}

void write_spectrum_csv(const Spectrum& spec, const std::filesystem::path& path, const std::string& config_hash) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.precision(17);
  f << "# method=" << to_string(spec.method);
  if (spec.method == PsdMethod::Welch) {
    f << " segment_len=" << spec.segment_len << " overlap=" << spec.overlap << " segments=" << spec.n_segments;
  }
  f << "\n# window=" << to_string(spec.window) << "\n# units=" << to_string(spec.units) << "\n# bin_hz=" << spec.bin_hz
    << "\n# config_hash=" << config_hash << "\nfreq_hz,value\n";
  for (std::size_t k = 0; k < spec.values.size(); ++k) f << spec.freq(k) << ',' << spec.values[k] << '\n';
  if (!f.flush()) throw IoError("write failed: " + path.string());
}

}  // namespace combtwin
