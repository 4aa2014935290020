// combtwin: command-line front end for the comb generator/analyzer twin.
//
// Exit codes: 0 success, 1 invalid arguments or configuration, 2 runtime or I/O failure.

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include "combtwin/harness.hpp"
#include "combtwin/version.hpp"

using namespace combtwin;

namespace {

struct Common {
  std::string config;
  std::string out = "results";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool long_run = false;
  std::optional<std::int64_t> l_acc, l_avg;
  std::optional<std::size_t> acq_len;
  std::optional<int> n_bands, tones_per_band, cordic_bits, cordic_iters;
  std::optional<std::string> demod, psd_method;
  std::optional<double> threshold;
};

void add_common(CLI::App& app, Common& c) {
  app.add_option("--config", c.config, "Built-in scenario name or INI file (default depends on command)");
  app.add_option("--out", c.out, "Output root directory")->capture_default_str();
  app.add_option("--seed", c.seed, "Override harness.seed");
  app.add_option("--threads", c.threads, "Worker cap; results do not depend on it")->capture_default_str();
  app.add_flag("--long-run", c.long_run, "Allow full-scale scenarios");
  app.add_option("--l-acc", c.l_acc, "Override generator.l_acc (re-places default tones)");
  app.add_option("--l-avg", c.l_avg, "Override analyzer.l_avg");
  app.add_option("--acq-len", c.acq_len, "Override harness.acquisition_len");
  app.add_option("--n-bands", c.n_bands, "Override generator.n_bands (re-places default tones)");
  app.add_option("--tones-per-band", c.tones_per_band, "Override generator.tones_per_band (re-places default tones)");
  app.add_option("--cordic-bits", c.cordic_bits, "Override cordic.data_bits");
  app.add_option("--cordic-iters", c.cordic_iters, "Override cordic.iterations");
  app.add_option("--demod", c.demod, "Override analyzer.demod_mode (sine|square)");
  app.add_option("--psd-method", c.psd_method, "Override harness.psd_method (welch|periodogram)");
  app.add_option("--threshold", c.threshold, "Override harness.spur_threshold_db");
}

ChainConfig resolve(const Common& c, const std::string& fallback) {
  ChainConfig cfg = load_config_or_builtin(c.config.empty() ? fallback : c.config);
  bool replace_tones = false;
  if (c.seed) cfg.seed = *c.seed;
  if (c.l_acc) cfg.generator.l_acc = *c.l_acc, replace_tones = true;
  if (c.n_bands) cfg.generator.n_bands = *c.n_bands, replace_tones = true;
  if (c.tones_per_band) cfg.generator.tones_per_band = *c.tones_per_band, replace_tones = true;
  if (c.l_avg) cfg.analyzer.l_avg = *c.l_avg;
  if (c.acq_len) cfg.acquisition_len = *c.acq_len;
  if (c.cordic_bits) cfg.generator.cordic.data_bits = *c.cordic_bits;
  if (c.cordic_iters) cfg.generator.cordic.iterations = *c.cordic_iters;
  if (c.demod) cfg.analyzer.demod_mode = parse_demod_mode(*c.demod);
  if (c.psd_method) {
    if (*c.psd_method == "welch") cfg.psd.method = PsdMethod::Welch;
    else if (*c.psd_method == "periodogram") cfg.psd.method = PsdMethod::Periodogram;
    else throw ConfigError("harness.psd_method: expected welch or periodogram");
  }
  if (c.threshold) cfg.spur_threshold_db = *c.threshold;
  if (replace_tones) {
    cfg.generator.validate();
    cfg.tones = default_tones(cfg.generator);
  }
  cfg.validate();
  return cfg;
}

RunOptions run_options(const Common& c) {
  if (c.threads < 1) throw ConfigError("--threads must be >= 1");
  return {c.threads, c.long_run, 0};
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void print_lines(const char* what, const SpurReport& r, double full_bin_hz) {
  std::cout << "    " << what << ": floor " << fmt("%.1f", r.floor_dbc_per_hz) << " dBc/Hz, ";
  if (r.lines.empty()) {
    std::cout << "no lines\n";
    return;
  }
  std::cout << "lines at";
  for (const auto& l : r.lines) {
    std::cout << " bin " << std::llround(l.freq_hz / full_bin_hz) << " (" << fmt("%.2f", l.freq_hz) << " Hz, "
              << fmt("%.1f", l.level_dbc) << " dBc)";
  }
  std::cout << "\n";
}

int cmd_run_loopback(const Common& c, bool use_float, bool quantized_interp) {
  const ChainConfig cfg = resolve(c, "desk_a");
  const RunOptions opt = run_options(c);
  const RunResult r = use_float ? float_oracle(cfg, {quantized_interp}, opt) : run_loopback(cfg, opt);
  const double fs = cfg.generator.band_rate_hz / static_cast<double>(cfg.analyzer.l_avg);
  const double full_bin = fs / static_cast<double>(cfg.acquisition_len);
  std::cout << "scenario " << r.scenario << (r.float_model ? " (float model)" : "") << "  config_hash " << r.config_hash
            << "\n  " << r.tones.size() << " tones, M=" << cfg.acquisition_len << ", fs=" << fmt("%.3f", fs) << " Hz, "
            << r.counters.full_rate_samples << " full-rate samples in " << fmt("%.2f", r.counters.wall_s) << " s ("
            << fmt("%.3g", r.counters.samples_per_s) << " samples/s)\n";
  std::cout << "  predicted spurs:";
  if (r.predicted.empty()) std::cout << " none";
  for (const auto& p : r.predicted) std::cout << " " << fmt("%.2f", p.freq_hz) << " Hz";
  std::cout << "\n";
  for (const auto& t : r.tones) {
    std::cout << "  band " << t.series.band_index << " tone " << t.series.tone_index << " word " << t.series.freq_word;
    if (t.amp_psd.values.empty()) {
      std::cout << ": silent\n";
      continue;
    }
    std::cout << "\n";
    print_lines("amplitude", t.amp_spurs, full_bin);
    print_lines("phase", t.phase_spurs, full_bin);
  }
  const Manifest m = persist(r, c.out);
  std::cout << "wrote " << (m.dir / "manifest.json").string() << "\n";
  return 0;
}

int cmd_sweep(const Common& c, std::vector<int> bits, std::vector<int> iters) {
  const ChainConfig cfg = resolve(c, "cordic_sweep");
  if (bits.empty()) bits = cfg.sweep.bits;
  if (iters.empty()) iters = cfg.sweep.iterations;
  const auto rows = run_cordic_sweep(bits, iters, cfg);
  std::cout << "bits  iters  sinad_db  sfdr_db\n";
  for (const auto& r : rows) {
    std::printf("%4d  %5d  %8.2f  %7.2f\n", r.bits, r.iterations, r.sinad_db, r.sfdr_db);
  }
  ChainConfig echo = cfg;
  echo.sweep = {bits, iters};
  const Manifest m = persist_sweep(rows, echo, c.out);
  std::cout << "wrote " << (m.dir / "manifest.json").string() << "\n";
  return 0;
}

int cmd_compare(const Common& c) {
  const ChainConfig cfg = resolve(c, "demod_compare");
  const DemodCompare r = run_demod_compare(cfg, run_options(c));
  std::cout << "target word " << r.target_word << ", interferer word " << r.interferer_word << " (band " << r.band
            << ")\n"
            << "  square/sine magnitude ratio " << fmt("%.5f", r.magnitude_ratio) << " (4/pi = "
            << fmt("%.5f", 4.0 / 3.14159265358979323846) << ")\n"
            << "  phase difference " << fmt("%.2e", r.phase_diff_rad) << " rad\n";
  for (const auto* m : {&r.sine, &r.square}) {
    std::cout << "  " << (m == &r.sine ? "sine  " : "square") << ": post-accumulation residual "
              << fmt("%.1f", m->post_residual_db) << " dB over floor, dc leakage " << fmt("%.1f", m->dc_leakage_db)
              << " dB, pre-accumulation lines " << m->pre_lines << "\n";
  }
  const Manifest mf = persist_compare(r, cfg, c.out);
  std::cout << "wrote " << (mf.dir / "manifest.json").string() << "\n";
  return 0;
}

int cmd_predict(std::int64_t l_acc, std::int64_t up, std::int64_t lut, std::int64_t l_avg, double band_rate,
                std::size_t max_lines) {
  auto lines = predict_spurs(l_acc, up, lut, l_avg, band_rate);
  std::stable_sort(lines.begin(), lines.end(),
                   [](const auto& a, const auto& b) { return a.attenuation_db < b.attenuation_db; });
  std::cout << "fs = " << fmt("%.6f", band_rate / static_cast<double>(l_avg)) << " Hz, residual period "
            << std::lcm(l_acc * up, lut) / up << " band samples\n";
  if (lines.empty()) std::cout << "no spurs predicted\n";
  for (std::size_t k = 0; k < lines.size() && k < max_lines; ++k) {
    std::cout << fmt("%.2f", lines[k].freq_hz) << " Hz  (boxcar attenuation " << fmt("%.2f", lines[k].attenuation_db)
              << " dB)\n";
  }
  if (lines.size() > max_lines) std::cout << "... " << lines.size() - max_lines << " weaker lines not shown\n";
  return 0;
}

struct RealSeries {
  std::vector<double> i, q;
  double rate_hz = 0.0;
};

RealSeries read_real_series(const std::string& path, std::size_t record) {
  RealSeries s;
  if (path.size() > 4 && path.substr(path.size() - 4) == ".bin") {
    const auto all = read_series_binary(path);
    if (record >= all.size()) throw ConfigError("--record " + std::to_string(record) + " out of range for " + path);
    for (const auto& v : all[record].samples) {
      s.i.push_back(static_cast<double>(v.i));
      s.q.push_back(static_cast<double>(v.q));
    }
    s.rate_hz = all[record].rate_hz;
    return s;
  }
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::string line;
  bool header = false;
  while (std::getline(f, line)) {
    if (line.empty() || line == "\r") continue;
    if (line[0] == '#') {
      const auto eq = line.find("rate_hz=");
      if (eq != std::string::npos) s.rate_hz = std::stod(line.substr(eq + 8));
      continue;
    }
    std::stringstream ss(line);
    std::string a, b, cc;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, cc, ',');
    try {
      std::size_t pos = 0;
      const double vi = std::stod(b, &pos);
      const double vq = std::stod(cc);
      s.i.push_back(vi);
      s.q.push_back(vq);
    } catch (const std::exception&) {
      if (header) throw IoError(path + ": malformed row '" + line + "'");
      header = true;
    }
  }
  return s;
}

int cmd_psd(const std::string& in, std::size_t record, const std::string& quantity, const std::string& method,
            const std::string& window, std::size_t segment, double overlap, double threshold, double fs_override,
            const std::string& out) {
  const RealSeries s = read_real_series(in, record);
  const double fs = fs_override > 0 ? fs_override : s.rate_hz;
  if (!(fs > 0)) throw ConfigError("--fs is required when the input carries no rate_hz");
  std::vector<cplx> iq(s.i.size());
  for (std::size_t k = 0; k < iq.size(); ++k) iq[k] = {s.i[k], s.q[k]};
  const AmpPhase ap = amp_phase(iq);
  PsdOptions opt;
  if (method == "periodogram") opt.method = PsdMethod::Periodogram;
  else if (method != "welch") throw ConfigError("--method must be welch or periodogram");
  if (window == "rect") opt.window = Window::Rect;
  else if (window != "hann") throw ConfigError("--window must be hann or rect");
  opt.segment_len = segment;
  opt.overlap = overlap;
  Spectrum spec;
  if (quantity == "amp") {
    spec = dbc_per_hz(psd(ap.amp_fluct, fs, opt), ap.mean_amp * ap.mean_amp);
  } else if (quantity == "phase") {
    spec = dbc_per_hz(psd(ap.d_phase, fs, opt), 1.0);
  } else {
    throw ConfigError("--quantity must be amp or phase");
  }
  const SpurReport r = detect_spurs(spec, {threshold, -280.0});
  print_lines(quantity.c_str(), r, fs / static_cast<double>(iq.size()));
  if (!out.empty()) {
    write_spectrum_csv(spec, out, "offline");
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int cmd_deglitch(const std::string& in, std::size_t record, std::uint64_t seed, const std::string& out) {
  const RealSeries s = read_real_series(in, record);
  const DeglitchResult ri = deglitch(s.i, seed);
  const DeglitchResult rq = deglitch(s.q, seed + 1);
  std::cout << "replaced " << ri.n_replaced + rq.n_replaced << " samples (i: " << ri.n_replaced
            << ", q: " << rq.n_replaced << ")\n";
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw IoError("cannot open " + out + " for writing");
    f.precision(17);
    if (s.rate_hz > 0) f << "# rate_hz=" << s.rate_hz << "\n";
    f << "# deglitch_seed=" << seed << "\nindex,i,q\n";
    for (std::size_t k = 0; k < ri.values.size(); ++k) f << k << ',' << ri.values[k] << ',' << rq.values[k] << '\n';
    if (!f.flush()) throw IoError("write failed: " + out);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int cmd_dump(const Common& c, const std::string& out) {
  const ChainConfig cfg = resolve(c, "desk_a");
  const std::string text = dump_config(cfg);
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out);
    if (!f || !(f << text) || !f.flush()) throw IoError("cannot write " + out);
    std::cout << "wrote " << out << " (config_hash " << config_hash(cfg) << ")\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bit-exact frequency-comb readout twin"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  Common common;

  auto* run = app.add_subcommand("run-loopback", "Generator output fed straight into the analyzer");
  add_common(*run, common);
  bool use_float = false, quantized_interp = false;
  run->add_flag("--float", use_float, "Run the double-precision model instead");
  run->add_flag("--quantized-interp", quantized_interp, "Float model with the 18-bit interpolator taps");

  auto* sweep = app.add_subcommand("sweep-cordic", "CORDIC SINAD/SFDR over bit widths and iteration counts");
  add_common(*sweep, common);
  std::vector<int> bits, iters;
  sweep->add_option("--bits", bits, "Bit widths (default from [sweep])")->delimiter(',');
  sweep->add_option("--iters", iters, "Iteration counts (default from [sweep])")->delimiter(',');

  auto* compare = app.add_subcommand("compare-demod", "Sine DDC vs square-wave demodulation on identical input");
  add_common(*compare, common);

  auto* predict = app.add_subcommand("predict-spurs", "Analytic spur lines of the period-extension mechanism");
  std::int64_t p_lacc = 65536, p_up = 8, p_lut = 40, p_lavg = 65536;
  double p_rate = 250e6;
  std::size_t p_max = 20;
  predict->add_option("--l-acc", p_lacc, "Phase accumulator modulus")->capture_default_str();
  predict->add_option("--upsample", p_up, "Upsampling factor")->capture_default_str();
  predict->add_option("--lut", p_lut, "Band shifter LUT length")->capture_default_str();
  predict->add_option("--l-avg", p_lavg, "Averaging length")->capture_default_str();
  predict->add_option("--band-rate", p_rate, "Band sample rate in Hz")->capture_default_str();
  predict->add_option("--max-lines", p_max, "Print at most this many lines, least attenuated first")->capture_default_str();

  auto* psdc = app.add_subcommand("psd", "Amplitude or phase PSD of a recorded I/Q series");
  std::string in, quantity = "amp", method = "welch", window = "hann", out_file;
  std::size_t record = 0, segment = 0;
  double overlap = 0.5, threshold = 10.0, fs = 0.0;
  psdc->add_option("--in", in, "I/Q CSV or .bin series file")->required();
  psdc->add_option("--record", record, "Record index inside a .bin file")->capture_default_str();
  psdc->add_option("--quantity", quantity, "amp or phase")->capture_default_str();
  psdc->add_option("--method", method, "welch or periodogram")->capture_default_str();
  psdc->add_option("--window", window, "hann or rect")->capture_default_str();
  psdc->add_option("--segment", segment, "Welch segment length (0: N/8)")->capture_default_str();
  psdc->add_option("--overlap", overlap, "Welch overlap fraction")->capture_default_str();
  psdc->add_option("--threshold", threshold, "Spur threshold over the median floor, dB")->capture_default_str();
  psdc->add_option("--fs", fs, "Sample rate if the file has none");
  psdc->add_option("--out", out_file, "Spectrum CSV to write");

  auto* deg = app.add_subcommand("deglitch", "mu +- 5 sigma replacement on the I and Q columns");
  std::string deg_in, deg_out;
  std::size_t deg_record = 0;
  std::uint64_t deg_seed = 0;
  deg->add_option("--in", deg_in, "I/Q CSV or .bin series file")->required();
  deg->add_option("--record", deg_record, "Record index inside a .bin file")->capture_default_str();
  deg->add_option("--seed", deg_seed, "RNG seed (Q uses seed+1)")->capture_default_str();
  deg->add_option("--out", deg_out, "Deglitched CSV to write");

  auto* dump = app.add_subcommand("dump-config", "Print the resolved configuration as INI");
  add_common(*dump, common);
  std::string dump_out;
  dump->add_option("--write", dump_out, "Write to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run_loopback(common, use_float, quantized_interp);
    if (*sweep) return cmd_sweep(common, bits, iters);
    if (*compare) return cmd_compare(common);
    if (*predict) return cmd_predict(p_lacc, p_up, p_lut, p_lavg, p_rate, p_max);
    if (*psdc) return cmd_psd(in, record, quantity, method, window, segment, overlap, threshold, fs, out_file);
    if (*deg) return cmd_deglitch(deg_in, deg_record, deg_seed, deg_out);
    if (*dump) return cmd_dump(common, dump_out);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
