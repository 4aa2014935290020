#include "combtwin/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <numeric>
#include <sstream>

#include "combtwin/version.hpp"
#include "parallel.hpp"

namespace combtwin {

namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

void check_runnable(const ChainConfig& cfg, const RunOptions& opt) {
  cfg.validate();
  if (cfg.full_scale && !opt.long_run) {
    throw ConfigError("harness.full_scale: scenario '" + cfg.scenario_name + "' is full scale and needs --long-run");
  }
}

std::size_t chunk_size(const RunOptions& opt) { return opt.chunk_band_samples ? opt.chunk_band_samples : 16384; }

std::uint64_t total_band_samples(const ChainConfig& cfg) {
  return (cfg.acquisition_len + static_cast<std::uint64_t>(cfg.warmup_windows)) *
         static_cast<std::uint64_t>(cfg.analyzer.l_avg);
}

std::vector<cplx> to_complex(const std::vector<CInt>& v) {
  std::vector<cplx> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = {static_cast<double>(v[k].i), static_cast<double>(v[k].q)};
  return out;
}

/// Amplitude and phase PSDs plus spur reports for one decimated series.
void analyze_tone(ToneResult& r, const std::vector<cplx>& iq, const ChainConfig& cfg,
                  const std::vector<PredictedSpur>& predicted) {
  const double fs = cfg.generator.band_rate_hz / static_cast<double>(cfg.analyzer.l_avg);
  double mean_amp = 0.0;
  for (const auto& v : iq) mean_amp += std::abs(v);
  if (iq.empty() || mean_amp == 0.0) return;  // silent tone: no carrier to reference
  const AmpPhase ap = amp_phase(iq);
  r.carrier_power = ap.mean_amp * ap.mean_amp;
  r.amp_psd = dbc_per_hz(psd(ap.amp_fluct, fs, cfg.psd), r.carrier_power);
  r.phase_psd = dbc_per_hz(psd(ap.d_phase, fs, cfg.psd), 1.0);
  const DetectOptions det{cfg.spur_threshold_db, cfg.arithmetic_floor_dbc};
  r.amp_spurs = detect_spurs(r.amp_psd, det);
  r.phase_spurs = detect_spurs(r.phase_psd, det);
  r.amp_spurs.predicted = predicted;
  r.phase_spurs.predicted = predicted;
}

std::vector<PredictedSpur> predicted_for(const ChainConfig& cfg) {
  const auto& g = cfg.generator;
  return predict_spurs(g.l_acc, g.upsample, g.shifter_lut_len, cfg.analyzer.l_avg, g.band_rate_hz);
}

// ---- float model -------------------------------------------------------------------------------
// Written independently of the fixed-point blocks: exact sinusoids, unquantized LUTs, double FIRs.

/// Exact e^{sign j 2 pi n / den} for n in [0, den).
std::vector<cplx> exact_table(std::int64_t den, double sign) {
  std::vector<cplx> t(static_cast<std::size_t>(den));
  for (std::int64_t n = 0; n < den; ++n) {
    const double th = sign * 2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(den);
    t[static_cast<std::size_t>(n)] = {std::cos(th), std::sin(th)};
  }
  return t;
}

/// Delay line whose window is contiguous, newest sample first.
class Ring {
 public:
  explicit Ring(std::size_t n) : n_(n), buf_(2 * n, cplx{0, 0}) {}
  void push(cplx v) {
    pos_ = pos_ == 0 ? n_ - 1 : pos_ - 1;
    buf_[pos_] = buf_[pos_ + n_] = v;
  }
  const cplx* window() const { return buf_.data() + pos_; }

 private:
  std::size_t n_;
  std::vector<cplx> buf_;
  std::size_t pos_ = 0;
};

class FloatLoopback {
 public:
  FloatLoopback(const ChainConfig& cfg, const FloatOracleOptions& fopt) : cfg_(cfg) {
    const auto& g = cfg.generator;
    const FilterSpec qi = g.effective_interp_filter();
    std::vector<double> interp;
    if (fopt.quantize_interp || !g.interp_filter.empty()) {
      interp = qi.real_taps();
    } else {
      interp = design_windowed_sinc(static_cast<int>(qi.taps.size()), 0.5 / g.upsample, g.upsample);
    }
    const std::size_t U = static_cast<std::size_t>(g.upsample);
    depth_ = (interp.size() + U - 1) / U;
    phases_.assign(U, std::vector<double>(depth_, 0.0));
    for (std::size_t k = 0; k < interp.size(); ++k) phases_[k % U][k / U] = interp[k];

    const FilterSpec qc = cfg.analyzer.effective_channelizer_filter(g);
    chan_ = cfg.analyzer.channelizer_filter.empty()
                ? design_windowed_sinc(static_cast<int>(qc.taps.size()), g.band_spacing_hz / 2 / g.full_rate_hz(), 1.0)
                : qc.real_taps();

    tone_tab_ = exact_table(g.l_acc, 1.0);
    down_tab_ = exact_table(g.down_shift_lut_len(), -1.0);
    up_tab_ = exact_table(g.down_shift_lut_len(), 1.0);
    shift_tab_ = exact_table(g.shifter_lut_len, 1.0);
    for (int b = 0; b < g.n_bands; ++b) bands_.push_back(Band{{}, Ring(depth_), Ring(chan_.size()), g.band_shift_step(b)});
    for (const auto& t : cfg.tones) {
      bands_[static_cast<std::size_t>(t.band_index)].tones.push_back(
          {t, std::ldexp(static_cast<double>(t.amplitude_code.raw()), -16), 0, 0, {0, 0}, 0, {}});
    }
    for (auto& b : bands_) {
      std::sort(b.tones.begin(), b.tones.end(),
                [](const Tone& x, const Tone& y) { return x.cfg.tone_index < y.cfg.tone_index; });
    }
  }

  void run(std::uint64_t n_band, std::size_t chunk, int threads) {
    const std::size_t U = static_cast<std::size_t>(cfg_.generator.upsample);
    std::vector<std::vector<cplx>> shifted(bands_.size());
    std::vector<cplx> wide;
    for (std::uint64_t done = 0; done < n_band; done += chunk) {
      const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(chunk, n_band - done));
      detail::parallel_for(bands_.size(), threads, [&](std::size_t b) { generate(b, n, shifted[b]); });
      wide.assign(n * U, {0, 0});
      for (const auto& s : shifted) {
        for (std::size_t k = 0; k < wide.size(); ++k) wide[k] += s[k];
      }
      detail::parallel_for(bands_.size(), threads, [&](std::size_t b) { analyze(b, wide); });
      full_n_ += n * U;
    }
  }

  std::vector<std::pair<ToneConfig, std::vector<cplx>>> outputs() const {
    std::vector<std::pair<ToneConfig, std::vector<cplx>>> out;
    for (const auto& b : bands_) {
      for (const auto& t : b.tones) out.emplace_back(t.cfg, t.out);
    }
    return out;
  }

 private:
  struct Tone {
    ToneConfig cfg;
    double amp;
    std::int64_t gen_phase;
    std::int64_t ref_phase;
    cplx acc;
    std::int64_t count;
    std::vector<cplx> out;
  };
  struct Band {
    std::vector<Tone> tones;
    Ring ihist;
    Ring chist;
    std::int64_t step;
    std::uint64_t band_n = 0;
    std::uint64_t sub_n = 0;
  };

  void generate(std::size_t b, std::size_t n, std::vector<cplx>& out) {
    const auto& g = cfg_.generator;
    Band& band = bands_[b];
    const std::int64_t L = g.l_acc;
    const std::size_t U = static_cast<std::size_t>(g.upsample);
    const std::uint64_t lut = static_cast<std::uint64_t>(g.shifter_lut_len);
    out.assign(n * U, {0, 0});
    for (std::size_t k = 0; k < n; ++k) {
      cplx s{0, 0};
      for (auto& t : band.tones) {
        s += t.amp * tone_tab_[static_cast<std::size_t>(t.gen_phase)];
        t.gen_phase = (t.gen_phase + t.cfg.freq_word) % L;
      }
      s *= down_tab_[band.band_n % down_tab_.size()];
      ++band.band_n;
      band.ihist.push(s);
      const cplx* w = band.ihist.window();
      for (std::size_t p = 0; p < U; ++p) {
        cplx y{0, 0};
        for (std::size_t i = 0; i < depth_; ++i) y += phases_[p][i] * w[i];
        const std::uint64_t m = full_n_ + k * U + p;
        out[k * U + p] = y * shift_tab_[(m * static_cast<std::uint64_t>(band.step)) % lut];
      }
    }
  }

  void analyze(std::size_t b, const std::vector<cplx>& wide) {
    const auto& g = cfg_.generator;
    Band& band = bands_[b];
    if (band.tones.empty()) return;
    const std::uint64_t D = static_cast<std::uint64_t>(cfg_.analyzer.decim);
    const std::uint64_t lut = static_cast<std::uint64_t>(g.shifter_lut_len);
    const std::int64_t L = g.l_acc;
    const std::int64_t Lavg = cfg_.analyzer.l_avg;
    const std::size_t T = chan_.size();
    for (std::size_t k = 0; k < wide.size(); ++k) {
      const std::uint64_t m = full_n_ + k;
      band.chist.push(wide[k] * std::conj(shift_tab_[(m * static_cast<std::uint64_t>(band.step)) % lut]));
      if (m % D != 0) continue;
      const cplx* w = band.chist.window();
      cplx y{0, 0};
      for (std::size_t i = 0; i < T; ++i) y += chan_[i] * w[i];
      y *= up_tab_[band.sub_n % up_tab_.size()];
      ++band.sub_n;
      for (auto& t : band.tones) {
        const std::int64_t p = t.ref_phase;
        cplx mixed;
        if (cfg_.analyzer.demod_mode == DemodMode::SquareWave) {
          // Exact quadrant tests on the integer phase, so sign(0) = +1 holds without round-off.
          const double sc = (4 * p <= L || 4 * p >= 3 * L) ? 1.0 : -1.0;
          const double ss = 2 * p <= L ? 1.0 : -1.0;
          mixed = y * cplx{sc, -ss};
        } else {
          mixed = y * std::conj(tone_tab_[static_cast<std::size_t>(p)]);
        }
        t.acc += mixed;
        t.ref_phase = (p + t.cfg.freq_word) % L;
        if (++t.count == Lavg) {
          t.out.push_back(t.acc);
          t.acc = {0, 0};
          t.count = 0;
        }
      }
    }
  }

  ChainConfig cfg_;
  std::size_t depth_ = 0;
  std::vector<std::vector<double>> phases_;
  std::vector<double> chan_;
  std::vector<cplx> tone_tab_, down_tab_, up_tab_, shift_tab_;
  std::vector<Band> bands_;
  std::uint64_t full_n_ = 0;
};

// ---- persistence helpers -----------------------------------------------------------------------

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_hash(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot read back " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return hex64(fnv1a64(ss.str()));
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot open " + p.string() + " for writing");
  f << text;
  if (!f.flush()) throw IoError("write failed: " + p.string());
}

/// Staging directory that becomes visible only once complete.
class RunDir {
 public:
  RunDir(const std::filesystem::path& out_dir, const std::string& name)
      : final_(out_dir / name), partial_(out_dir / (name + ".partial")) {
    try {
      std::filesystem::create_directories(out_dir);
      std::filesystem::remove_all(partial_);
      std::filesystem::create_directories(partial_);
    } catch (const std::filesystem::filesystem_error& e) {
      throw IoError(std::string("cannot prepare output directory: ") + e.what());
    }
  }
  RunDir(const RunDir&) = delete;
  RunDir& operator=(const RunDir&) = delete;
  ~RunDir() {
    if (!committed_) {
      std::error_code ec;
      std::filesystem::remove_all(partial_, ec);
    }
  }

  std::filesystem::path path(const std::string& rel) {
    const auto p = partial_ / rel;
    try {
      std::filesystem::create_directories(p.parent_path());
    } catch (const std::filesystem::filesystem_error& e) {
      throw IoError(std::string("cannot create directory: ") + e.what());
    }
    return p;
  }

  /// Registers a deterministic payload file for the manifest.
  void record(const std::string& rel) { files_.push_back(rel); }

  Manifest commit(json manifest, const std::string& hash) {
    json files = json::array();
    for (const auto& rel : files_) files.push_back({{"path", rel}, {"fnv1a64", file_hash(partial_ / rel)}});
    manifest["files"] = files;
    write_text(partial_ / "manifest.json", manifest.dump(2) + "\n");
    try {
      std::filesystem::remove_all(final_);
      std::filesystem::rename(partial_, final_);
    } catch (const std::filesystem::filesystem_error& e) {
      throw IoError(std::string("cannot finalize output directory: ") + e.what());
    }
    committed_ = true;
    return {final_, files_, hash};
  }

 private:
  std::filesystem::path final_, partial_;
  std::vector<std::string> files_;
  bool committed_ = false;
};

json manifest_head(const ChainConfig& cfg, const std::string& hash, const std::string& kind) {
  return json{{"scenario", cfg.scenario_name},
              {"kind", kind},
              {"config_hash", hash},
              {"versions", {{"combtwin", kVersion}, {"series_binary", kSeriesBinaryVersion}}},
              {"config", dump_config(cfg)}};
}

json spur_json(const SpurReport& r) {
  json lines = json::array();
  for (const auto& l : r.lines) lines.push_back({{"bin", l.bin}, {"freq_hz", l.freq_hz}, {"level_dbc", l.level_dbc}});
  return {{"floor_dbc_per_hz", r.floor_dbc_per_hz}, {"lines", lines}};
}

std::string tone_stem(const ToneResult& t) {
  return "b" + std::to_string(t.series.band_index) + "_t" + std::to_string(t.series.tone_index);
}

void write_float_series(const std::vector<cplx>& v, const IqTimeSeries& meta, const std::filesystem::path& p) {
  std::ofstream f(p);
  if (!f) throw IoError("cannot open " + p.string() + " for writing");
  f.precision(17);
  f << "# band_index=" << meta.band_index << "\n# tone_index=" << meta.tone_index << "\n# freq_word=" << meta.freq_word
    << "\n# l_avg=" << meta.l_avg << "\n# rate_hz=" << meta.rate_hz << "\n# demod_mode=" << to_string(meta.mode)
    << "\n# model=float\nindex,i,q\n";
  for (std::size_t k = 0; k < v.size(); ++k) f << k << ',' << v[k].real() << ',' << v[k].imag() << '\n';
  if (!f.flush()) throw IoError("write failed: " + p.string());
}

// Captures the channelized target band for a given tone set.
IqStream capture_subband(const ChainConfig& cfg, const std::vector<ToneConfig>& tones, int band, const RunOptions& opt) {
  CombGenerator gen(cfg.generator, tones);
  Channelizer ch(cfg.generator, cfg.analyzer, band, gen.output_format(), cfg.analyzer.polyphase);
  IqStream sub{gen.output_format(), cfg.generator.band_rate_hz, {}};
  const std::uint64_t total = total_band_samples(cfg);
  sub.samples.reserve(static_cast<std::size_t>(total));
  std::vector<CInt> wb;
  const std::size_t chunk = chunk_size(opt);
  for (std::uint64_t done = 0; done < total; done += chunk) {
    const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(chunk, total - done));
    gen.produce(n, wb, opt.threads);
    ch.process(wb, sub.samples);
  }
  return sub;
}

double line_excess(const Spectrum& s, const ChainConfig& cfg) {
  if (s.values.size() < 2) return -3000.0;
  std::vector<double> body(s.values.begin() + 1, s.values.end());
  std::nth_element(body.begin(), body.begin() + static_cast<std::ptrdiff_t>(body.size() / 2), body.end());
  const double floor = std::max(body[body.size() / 2], cfg.arithmetic_floor_dbc - 10.0 * std::log10(s.bin_hz));
  return *std::max_element(s.values.begin() + 1, s.values.end()) - floor;
}

std::size_t count_lines(const std::vector<CInt>& y, double range_db) {
  std::vector<cplx> x = to_complex(y);
  const std::vector<cplx> X = fft(x);
  double peak = 0.0;
  for (const auto& v : X) peak = std::max(peak, std::norm(v));
  const double thr = peak * std::pow(10.0, -range_db / 10.0);
  return static_cast<std::size_t>(std::count_if(X.begin(), X.end(), [&](const cplx& v) { return std::norm(v) >= thr; }));
}

}  // namespace

RunResult run_loopback(const ChainConfig& cfg, const RunOptions& opt) {
  check_runnable(cfg, opt);
  const auto t0 = Clock::now();
  CombGenerator gen(cfg.generator, cfg.tones);
  CombAnalyzer an(cfg.generator, cfg.analyzer, cfg.tones, gen.cordic_table());
  const std::uint64_t total = total_band_samples(cfg);
  const std::size_t chunk = chunk_size(opt);
  std::vector<CInt> wb;
  for (std::uint64_t done = 0; done < total; done += chunk) {
    const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(chunk, total - done));
    gen.produce(n, wb, opt.threads);
    an.process(wb, opt.threads);
  }

  RunResult r;
  r.scenario = cfg.scenario_name;
  r.config_hash = config_hash(cfg);
  r.config = cfg;
  r.predicted = predicted_for(cfg);
  auto series = an.finish();
  r.tones.resize(series.size());
  detail::parallel_for(series.size(), opt.threads, [&](std::size_t k) {
    auto& s = series[k];
    s.samples.erase(s.samples.begin(), s.samples.begin() + cfg.warmup_windows);
    r.tones[k].series = std::move(s);
    analyze_tone(r.tones[k], to_complex(r.tones[k].series.samples), cfg, r.predicted);
  });
  const double wall = std::chrono::duration<double>(Clock::now() - t0).count();
  r.counters = {wall, total * static_cast<std::uint64_t>(cfg.generator.upsample),
                wall > 0 ? static_cast<double>(total * static_cast<std::uint64_t>(cfg.generator.upsample)) / wall : 0.0,
                opt.threads};
  return r;
}

RunResult float_oracle(const ChainConfig& cfg, const FloatOracleOptions& fopt, const RunOptions& opt) {
  check_runnable(cfg, opt);
  const auto t0 = Clock::now();
  FloatLoopback model(cfg, fopt);
  const std::uint64_t total = total_band_samples(cfg);
  model.run(total, chunk_size(opt), opt.threads);

  RunResult r;
  r.scenario = cfg.scenario_name;
  r.config_hash = config_hash(cfg);
  r.config = cfg;
  r.float_model = true;
  r.predicted = predicted_for(cfg);
  for (auto& [tone, out] : model.outputs()) {
    ToneResult t;
    t.series.band_index = tone.band_index;
    t.series.tone_index = tone.tone_index;
    t.series.freq_word = tone.freq_word;
    t.series.l_avg = cfg.analyzer.l_avg;
    t.series.rate_hz = cfg.generator.band_rate_hz / static_cast<double>(cfg.analyzer.l_avg);
    t.series.mode = cfg.analyzer.demod_mode;
    t.float_series.assign(out.begin() + std::min<std::ptrdiff_t>(cfg.warmup_windows, static_cast<std::ptrdiff_t>(out.size())), out.end());
    analyze_tone(t, t.float_series, cfg, r.predicted);
    r.tones.push_back(std::move(t));
  }
  const double wall = std::chrono::duration<double>(Clock::now() - t0).count();
  const std::uint64_t full = total * static_cast<std::uint64_t>(cfg.generator.upsample);
  r.counters = {wall, full, wall > 0 ? static_cast<double>(full) / wall : 0.0, opt.threads};
  return r;
}

std::vector<SweepRow> run_cordic_sweep(const std::vector<int>& bits, const std::vector<int>& iters,
                                       const ChainConfig& base) {
  base.generator.validate();
  if (base.tones.empty()) throw ConfigError("sweep: base config needs one tone");
  const std::int64_t L = base.generator.l_acc;
  const std::int64_t k = base.tones.front().freq_word;
  if (k == 0 || std::gcd(k, L) != 1) throw ConfigError("sweep: tones[0].freq_word must be coprime to l_acc");
  if (!fft_supported(static_cast<std::size_t>(L))) throw ConfigError("sweep: generator.l_acc must be 2^a * 5^b");
  const std::size_t bin = static_cast<std::size_t>(std::min(k, L - k));
  std::vector<SweepRow> rows;
  for (int b : bits) {
    for (int n : iters) {
      CordicConfig c = base.generator.cordic;
      c.data_bits = b;
      c.iterations = n;
      c.phase_bits = -1;
      c.angle_bits = -1;
      if (n > b) continue;  // default angle_bits is b
      const CordicTable table(c, L);
      std::vector<double> wave(static_cast<std::size_t>(L));
      std::int64_t p = 0;
      for (auto& v : wave) {
        v = static_cast<double>(table[p].i);
        p += k;
        if (p >= L) p -= L;
      }
      const SinadSfdr m = sinad_sfdr(wave, bin);
      rows.push_back({b, n, m.sinad_db, m.sfdr_db});
    }
  }
  return rows;
}

DemodCompare run_demod_compare(const ChainConfig& cfg, const RunOptions& opt) {
  check_runnable(cfg, opt);
  const ToneConfig target = cfg.tones.front();
  std::vector<ToneConfig> both{target};
  for (std::size_t k = 1; k < cfg.tones.size(); ++k) {
    if (cfg.tones[k].band_index == target.band_index) both.push_back(cfg.tones[k]);
  }
  if (both.size() < 2) throw ConfigError("tones: demod compare needs a second tone in the target band");
  const std::size_t L = static_cast<std::size_t>(cfg.analyzer.l_avg);
  if (!fft_supported(L)) throw ConfigError("analyzer.l_avg: demod compare needs a 2^a * 5^b averaging length");

  DemodCompare out;
  out.config_hash = config_hash(cfg);
  out.band = target.band_index;
  out.target_word = target.freq_word;
  out.interferer_word = both[1].freq_word;

  const IqStream sub1 = capture_subband(cfg, {target}, target.band_index, opt);
  const IqStream sub2 = capture_subband(cfg, both, target.band_index, opt);
  const IqStream ref = reference_stream(target.freq_word, cfg.generator, sub1.size());
  double rr = 0.0;
  for (const auto& v : ref.samples) rr += static_cast<double>(v.i) * static_cast<double>(v.i) + static_cast<double>(v.q) * static_cast<double>(v.q);
  out.reference_rms = std::sqrt(rr / static_cast<double>(ref.size()));

  const std::size_t skip = static_cast<std::size_t>(cfg.warmup_windows) * L;
  std::size_t pre_n = L;
  while (pre_n * 2 <= std::min<std::size_t>(16 * L, sub2.size() - skip)) pre_n *= 2;

  auto stats = [&](DemodMode mode) {
    DemodModeStats st;
    auto mean_of = [&](const IqStream& sub) {
      IqTimeSeries s = mode == DemodMode::SineDdc ? ddc_sine(sub, ref, cfg.analyzer.l_avg) : ddc_square(sub, ref, cfg.analyzer.l_avg);
      s.samples.erase(s.samples.begin(), s.samples.begin() + cfg.warmup_windows);
      cplx m{0, 0};
      for (const auto& v : s.samples) m += cplx{static_cast<double>(v.i), static_cast<double>(v.q)};
      return std::pair{m / static_cast<double>(s.samples.size()), s};
    };
    auto [m1, s1] = mean_of(sub1);
    auto [m2, s2] = mean_of(sub2);
    st.single_mean = m1;
    st.two_tone_mean = m2;
    st.dc_leakage_db = 20.0 * std::log10(std::max(std::abs(m2 - m1), 1e-300) / std::abs(m1));
    ToneResult tr;
    analyze_tone(tr, to_complex(s2.samples), cfg, {});
    st.post_residual_db = std::max(line_excess(tr.amp_psd, cfg), line_excess(tr.phase_psd, cfg));
    st.post_lines = tr.amp_spurs.lines.size() + tr.phase_spurs.lines.size();

    IqStream a{sub2.format, sub2.rate_hz, {sub2.samples.begin() + static_cast<std::ptrdiff_t>(skip), sub2.samples.begin() + static_cast<std::ptrdiff_t>(skip + pre_n)}};
    IqStream r{ref.format, ref.rate_hz, {ref.samples.begin() + static_cast<std::ptrdiff_t>(skip), ref.samples.begin() + static_cast<std::ptrdiff_t>(skip + pre_n)}};
    st.pre_lines = count_lines(demodulate(a, r, mode), out.line_range_db);
    return st;
  };
  out.sine = stats(DemodMode::SineDdc);
  out.square = stats(DemodMode::SquareWave);
  out.magnitude_ratio = std::abs(out.square.single_mean) / (std::abs(out.sine.single_mean) / out.reference_rms);
  out.phase_diff_rad = std::arg(out.square.single_mean / out.sine.single_mean);
  return out;
}

Manifest persist(const RunResult& result, const std::filesystem::path& out_dir) {
  RunDir dir(out_dir, result.scenario);
  write_text(dir.path("config.ini"), dump_config(result.config));
  dir.record("config.ini");

  std::vector<IqTimeSeries> all;
  for (const auto& t : result.tones) {
    const std::string stem = tone_stem(t);
    const std::string series_rel = "series/" + stem + ".csv";
    if (result.float_model) {
      write_float_series(t.float_series, t.series, dir.path(series_rel));
    } else {
      write_series_csv(t.series, dir.path(series_rel));
      all.push_back(t.series);
    }
    dir.record(series_rel);
    if (!t.amp_psd.values.empty()) {
      write_spectrum_csv(t.amp_psd, dir.path("spectra/" + stem + "_amp.csv"), result.config_hash);
      write_spectrum_csv(t.phase_psd, dir.path("spectra/" + stem + "_phase.csv"), result.config_hash);
      dir.record("spectra/" + stem + "_amp.csv");
      dir.record("spectra/" + stem + "_phase.csv");
    }
  }
  if (!result.float_model) {
    write_series_binary(all, dir.path("series.bin"));
    dir.record("series.bin");
  }

  json predicted = json::array();
  for (const auto& p : result.predicted) {
    predicted.push_back({{"freq_hz", p.freq_hz}, {"attenuation_db", p.attenuation_db}, {"origin", p.origin}});
  }
  json tones = json::array();
  for (const auto& t : result.tones) {
    tones.push_back({{"band_index", t.series.band_index},
                     {"tone_index", t.series.tone_index},
                     {"freq_word", t.series.freq_word},
                     {"carrier_power", t.carrier_power},
                     {"amplitude", spur_json(t.amp_spurs)},
                     {"phase", spur_json(t.phase_spurs)}});
  }
  json spurs{{"config_hash", result.config_hash}, {"predicted", predicted}, {"tones", tones}};
  write_text(dir.path("spurs.json"), spurs.dump(2) + "\n");
  dir.record("spurs.json");

  json stats{{"wall_s", result.counters.wall_s},
             {"full_rate_samples", result.counters.full_rate_samples},
             {"samples_per_s", result.counters.samples_per_s},
             {"threads", result.counters.threads}};
  write_text(dir.path("run_stats.json"), stats.dump(2) + "\n");

  json m = manifest_head(result.config, result.config_hash, result.float_model ? "float_oracle" : "loopback");
  m["run_stats"] = "run_stats.json";
  return dir.commit(std::move(m), result.config_hash);
}

Manifest persist_sweep(const std::vector<SweepRow>& rows, const ChainConfig& cfg, const std::filesystem::path& out_dir) {
  const std::string hash = config_hash(cfg);
  RunDir dir(out_dir, cfg.scenario_name);
  std::ostringstream csv;
  csv.precision(17);
  csv << "# config_hash=" << hash << "\nbits,iterations,sinad_db,sfdr_db\n";
  for (const auto& r : rows) csv << r.bits << ',' << r.iterations << ',' << r.sinad_db << ',' << r.sfdr_db << '\n';
  write_text(dir.path("sweep.csv"), csv.str());
  dir.record("sweep.csv");
  write_text(dir.path("config.ini"), dump_config(cfg));
  dir.record("config.ini");
  return dir.commit(manifest_head(cfg, hash, "cordic_sweep"), hash);
}

Manifest persist_compare(const DemodCompare& c, const ChainConfig& cfg, const std::filesystem::path& out_dir) {
  RunDir dir(out_dir, cfg.scenario_name);
  auto mode_json = [](const DemodModeStats& s) {
    return json{{"single_mean", {s.single_mean.real(), s.single_mean.imag()}},
                {"two_tone_mean", {s.two_tone_mean.real(), s.two_tone_mean.imag()}},
                {"post_residual_db", s.post_residual_db},
                {"dc_leakage_db", s.dc_leakage_db},
                {"pre_accumulation_lines", s.pre_lines},
                {"post_accumulation_lines", s.post_lines}};
  };
  json j{{"config_hash", c.config_hash},
         {"band", c.band},
         {"target_word", c.target_word},
         {"interferer_word", c.interferer_word},
         {"reference_rms", c.reference_rms},
         {"magnitude_ratio", c.magnitude_ratio},
         {"expected_ratio", 4.0 / std::numbers::pi},
         {"phase_diff_rad", c.phase_diff_rad},
         {"line_range_db", c.line_range_db},
         {"sine", mode_json(c.sine)},
         {"square", mode_json(c.square)}};
  write_text(dir.path("compare.json"), j.dump(2) + "\n");
  dir.record("compare.json");
  write_text(dir.path("config.ini"), dump_config(cfg));
  dir.record("config.ini");
  return dir.commit(manifest_head(cfg, c.config_hash, "demod_compare"), c.config_hash);
}

}  // namespace combtwin
