#include "combtwin/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "combtwin/fft.hpp"

namespace combtwin {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <class T>
T parse_int(const std::string& key, const std::string& s) {
  T v{};
  const char* b = s.data();
  const char* e = s.data() + s.size();
  const auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc{} || r.ptr != e) throw ConfigError(key + ": expected an integer, got '" + s + "'");
  return v;
}

double parse_double(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + s + "'");
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(key + ": expected true/false, got '" + s + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? "" : cur.substr(b, e - b + 1));
  }
  return out;
}

template <class T>
std::vector<T> parse_int_list(const std::string& key, const std::string& s) {
  std::vector<T> out;
  for (const auto& item : split(s, ',')) out.push_back(parse_int<T>(key, item));
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + std::to_string(v[k]);
  return s;
}

Rounding parse_rounding(const std::string& key, const std::string& s) {
  if (s == "truncate") return Rounding::TruncateTowardNegInf;
  if (s == "round_half_up") return Rounding::RoundHalfUp;
  throw ConfigError(key + ": expected truncate or round_half_up, got '" + s + "'");
}

std::string rounding_name(Rounding r) { return r == Rounding::RoundHalfUp ? "round_half_up" : "truncate"; }

/// Filter keys: <prefix>_taps = default | comma list of raw ints; <prefix>_coeff_bits; <prefix>_coeff_frac.
struct FilterKeys {
  std::string taps = "default";
  int bits = 18;
  int frac = 16;
};

FilterSpec build_filter(const std::string& key, const FilterKeys& k) {
  if (k.taps == "default") return {};
  FilterSpec f;
  f.taps = parse_int_list<std::int64_t>(key, k.taps);
  f.coeff_format = FxpFormat::make(k.bits, k.frac, Overflow::Saturate, Rounding::RoundHalfUp);
  f.description = "custom taps from config";
  return f;
}

std::string taps_text(const FilterSpec& f) { return f.empty() ? "default" : join(f.taps); }

std::size_t psd_segment(const ChainConfig& c) {
  if (c.psd.method == PsdMethod::Periodogram) return c.acquisition_len;
  return c.psd.segment_len ? c.psd.segment_len : c.acquisition_len / 8;
}

std::int64_t placed_word(std::int64_t target, std::int64_t L, const std::vector<std::int64_t>& used) {
  for (std::int64_t d = 0; d < L; ++d) {
    for (std::int64_t w : {target + d, target - d}) {
      if (w <= 0 || w >= L || w % 2 == 0 || std::gcd(w, L) != 1) continue;
      if (std::find(used.begin(), used.end(), w) != used.end()) continue;
      return w;
    }
  }
  throw ConfigError("tones: cannot place " + std::to_string(used.size() + 1) + " distinct words coprime to l_acc=" +
                    std::to_string(L));
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<ToneConfig> default_tones(const GeneratorConfig& gen) {
  std::vector<ToneConfig> out;
  const std::int64_t amp = std::llround(65536.0 / gen.tones_per_band);
  const double span = 0.4 * static_cast<double>(gen.l_acc);
  for (int b = 0; b < gen.n_bands; ++b) {
    std::vector<std::int64_t> used;
    for (int t = 0; t < gen.tones_per_band; ++t) {
      const auto target = static_cast<std::int64_t>(std::floor((2 * t + 1) * span / (2 * gen.tones_per_band)));
      const std::int64_t w = placed_word(target, gen.l_acc, used);
      used.push_back(w);
      out.push_back({b, t, w, FxpValue(amp, amplitude_format())});
    }
  }
  return out;
}

void ChainConfig::validate() const {
  generator.validate();
  analyzer.validate(generator);
  require(!tones.empty(), "tones: at least one tone is required");
  validate_tones(generator, tones);
  require(acquisition_len >= 1, "harness.acquisition_len must be >= 1");
  require(warmup_windows >= 0, "harness.warmup_windows must be >= 0");
  require(spur_threshold_db > 0, "harness.spur_threshold_db must be > 0");
  require(psd.overlap >= 0 && psd.overlap < 1, "harness.psd_overlap must be in [0, 1)");
  const std::size_t seg = psd_segment(*this);
  require(seg >= 2 && seg <= acquisition_len,
          "harness.psd_segment_len: segment " + std::to_string(seg) + " does not fit acquisition_len");
  require(fft_supported(seg), "harness.psd_segment_len: length " + std::to_string(seg) + " must be 2^a * 5^b");
  for (int b : sweep.bits) require(b >= 4 && b <= 32, "sweep.bits entries must be in [4, 32]");
  for (int n : sweep.iterations) require(n >= 1, "sweep.iterations entries must be >= 1");
}

std::vector<std::string> builtin_names() {
  return {"desk_a", "desk_b", "demod_compare", "cordic_sweep", "full_65536", "full_65520"};
}

bool is_builtin(const std::string& name) {
  const auto names = builtin_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

ChainConfig builtin_config(const std::string& name) {
  ChainConfig c;
  c.scenario_name = name;
  auto desk = [&](std::int64_t L) {
    c.generator.n_bands = 2;
    c.generator.tones_per_band = 4;
    c.generator.l_acc = L;
    c.analyzer.l_avg = L;
    c.acquisition_len = 2560;
  };
  if (name == "desk_a") {
    desk(1024);
  } else if (name == "desk_b") {
    desk(1020);
  } else if (name == "demod_compare") {
    c.generator.n_bands = 1;
    c.generator.tones_per_band = 2;
    c.generator.l_acc = 1280;
    c.analyzer.l_avg = 1280;
    c.acquisition_len = 320;
  } else if (name == "cordic_sweep") {
    c.generator.n_bands = 1;
    c.generator.tones_per_band = 1;
    c.analyzer.l_avg = 65536;
    c.acquisition_len = 16;
  } else if (name == "full_65536" || name == "full_65520") {
    const std::int64_t L = name == "full_65536" ? 65536 : 65520;
    c.generator.l_acc = L;
    c.analyzer.l_avg = L;
    c.acquisition_len = 655360;
    c.full_scale = true;
  } else {
    std::string known;
    for (const auto& n : builtin_names()) known += " " + n;
    throw ConfigError("unknown scenario '" + name + "' (built-ins:" + known + ")");
  }
  c.tones = default_tones(c.generator);
  return c;
}

ChainConfig parse_config(const std::string& text, const std::string& source) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  ChainConfig c;
  GeneratorConfig& g = c.generator;
  AnalyzerConfig& a = c.analyzer;
  FilterKeys interp, chan;
  std::map<int, std::string> tone_lines;
  bool auto_tones = true;

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError(source + ": key '" + section + "' outside any section");
    for (const auto& [k, node] : body) {
      const std::string v = node.data();
      const std::string key = section + "." + k;
      if (section == "harness") {
        if (k == "scenario") c.scenario_name = v;
        else if (k == "acquisition_len") c.acquisition_len = parse_int<std::size_t>(key, v);
        else if (k == "warmup_windows") c.warmup_windows = parse_int<int>(key, v);
        else if (k == "seed") c.seed = parse_int<std::uint64_t>(key, v);
        else if (k == "psd_method") {
          if (v == "welch") c.psd.method = PsdMethod::Welch;
          else if (v == "periodogram") c.psd.method = PsdMethod::Periodogram;
          else throw ConfigError(key + ": expected welch or periodogram, got '" + v + "'");
        } else if (k == "psd_window") {
          if (v == "hann") c.psd.window = Window::Hann;
          else if (v == "rect") c.psd.window = Window::Rect;
          else throw ConfigError(key + ": expected hann or rect, got '" + v + "'");
        } else if (k == "psd_segment_len") c.psd.segment_len = parse_int<std::size_t>(key, v);
        else if (k == "psd_overlap") c.psd.overlap = parse_double(key, v);
        else if (k == "spur_threshold_db") c.spur_threshold_db = parse_double(key, v);
        else if (k == "arithmetic_floor_dbc") c.arithmetic_floor_dbc = parse_double(key, v);
        else if (k == "full_scale") c.full_scale = parse_bool(key, v);
        else throw ConfigError("unknown key " + key);
      } else if (section == "generator") {
        if (k == "n_bands") g.n_bands = parse_int<int>(key, v);
        else if (k == "tones_per_band") g.tones_per_band = parse_int<int>(key, v);
        else if (k == "l_acc") g.l_acc = parse_int<std::int64_t>(key, v);
        else if (k == "band_rate_hz") g.band_rate_hz = parse_double(key, v);
        else if (k == "band_spacing_hz") g.band_spacing_hz = parse_double(key, v);
        else if (k == "upsample") g.upsample = parse_int<int>(key, v);
        else if (k == "shifter_lut_len") g.shifter_lut_len = parse_int<int>(key, v);
        else if (k == "tone_bits") g.tone_bits = parse_int<int>(key, v);
        else if (k == "sum_width_bits") g.sum_width_bits = parse_int<int>(key, v);
        else if (k == "lut_coeff_bits") g.lut_coeff_bits = parse_int<int>(key, v);
        else if (k == "rounding") g.rounding = parse_rounding(key, v);
        else if (k == "interp_taps") interp.taps = v;
        else if (k == "interp_coeff_bits") interp.bits = parse_int<int>(key, v);
        else if (k == "interp_coeff_frac") interp.frac = parse_int<int>(key, v);
        else throw ConfigError("unknown key " + key);
      } else if (section == "cordic") {
        if (k == "data_bits") g.cordic.data_bits = parse_int<int>(key, v);
        else if (k == "iterations") g.cordic.iterations = parse_int<int>(key, v);
        else if (k == "phase_bits") g.cordic.phase_bits = parse_int<int>(key, v);
        else if (k == "angle_bits") g.cordic.angle_bits = parse_int<int>(key, v);
        else if (k == "guard_bits") g.cordic.guard_bits = parse_int<int>(key, v);
        else throw ConfigError("unknown key " + key);
      } else if (section == "analyzer") {
        if (k == "decim") a.decim = parse_int<int>(key, v);
        else if (k == "l_avg") a.l_avg = parse_int<std::int64_t>(key, v);
        else if (k == "demod_mode") a.demod_mode = parse_demod_mode(v);
        else if (k == "accumulator_width_bits") a.accumulator_width_bits = parse_int<int>(key, v);
        else if (k == "polyphase") a.polyphase = parse_bool(key, v);
        else if (k == "channelizer_taps") chan.taps = v;
        else if (k == "channelizer_coeff_bits") chan.bits = parse_int<int>(key, v);
        else if (k == "channelizer_coeff_frac") chan.frac = parse_int<int>(key, v);
        else throw ConfigError("unknown key " + key);
      } else if (section == "sweep") {
        if (k == "bits") c.sweep.bits = parse_int_list<int>(key, v);
        else if (k == "iterations") c.sweep.iterations = parse_int_list<int>(key, v);
        else throw ConfigError("unknown key " + key);
      } else if (section == "tones") {
        if (k == "placement") {
          if (v == "auto") auto_tones = true;
          else if (v == "explicit") auto_tones = false;
          else throw ConfigError(key + ": expected auto or explicit, got '" + v + "'");
        } else if (k.size() > 1 && k[0] == 't') {
          tone_lines[parse_int<int>(key, k.substr(1))] = v;
          auto_tones = false;
        } else {
          throw ConfigError("unknown key " + key);
        }
      } else {
        throw ConfigError(source + ": unknown section [" + section + "]");
      }
    }
  }

  g.interp_filter = build_filter("generator.interp_taps", interp);
  a.channelizer_filter = build_filter("analyzer.channelizer_taps", chan);
  if (auto_tones) {
    g.validate();
    c.tones = default_tones(g);
  } else {
    for (const auto& [idx, line] : tone_lines) {
      const std::string key = "tones.t" + std::to_string(idx);
      const auto f = split(line, ',');
      if (f.size() != 4) throw ConfigError(key + ": expected band,tone,freq_word,amplitude_raw");
      const auto amp = parse_int<std::int64_t>(key, f[3]);
      if (!amplitude_format().contains(amp)) throw ConfigError(key + ": amplitude_raw outside Q2.16");
      c.tones.push_back({parse_int<int>(key, f[0]), parse_int<int>(key, f[1]), parse_int<std::int64_t>(key, f[2]),
                         FxpValue(amp, amplitude_format())});
    }
  }
  return c;
}

ChainConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path.string());
}

ChainConfig load_config_or_builtin(const std::string& name_or_path) {
  if (is_builtin(name_or_path)) return builtin_config(name_or_path);
  return load_config(name_or_path);
}

std::string dump_config(const ChainConfig& c) {
  const GeneratorConfig& g = c.generator;
  const AnalyzerConfig& a = c.analyzer;
  const FilterSpec& fi = g.interp_filter;
  const FilterSpec& fc = a.channelizer_filter;
  std::ostringstream o;
  o << "[harness]\n"
    << "scenario = " << c.scenario_name << "\n"
    << "acquisition_len = " << c.acquisition_len << "\n"
    << "warmup_windows = " << c.warmup_windows << "\n"
    << "seed = " << c.seed << "\n"
    << "psd_method = " << (c.psd.method == PsdMethod::Welch ? "welch" : "periodogram") << "\n"
    << "psd_window = " << (c.psd.window == Window::Hann ? "hann" : "rect") << "\n"
    << "psd_segment_len = " << c.psd.segment_len << "\n"
    << "psd_overlap = " << fmt_double(c.psd.overlap) << "\n"
    << "spur_threshold_db = " << fmt_double(c.spur_threshold_db) << "\n"
    << "arithmetic_floor_dbc = " << fmt_double(c.arithmetic_floor_dbc) << "\n"
    << "full_scale = " << (c.full_scale ? "true" : "false") << "\n\n"
    << "[generator]\n"
    << "n_bands = " << g.n_bands << "\n"
    << "tones_per_band = " << g.tones_per_band << "\n"
    << "l_acc = " << g.l_acc << "\n"
    << "band_rate_hz = " << fmt_double(g.band_rate_hz) << "\n"
    << "band_spacing_hz = " << fmt_double(g.band_spacing_hz) << "\n"
    << "upsample = " << g.upsample << "\n"
    << "shifter_lut_len = " << g.shifter_lut_len << "\n"
    << "tone_bits = " << g.tone_bits << "\n"
    << "sum_width_bits = " << g.sum_width_bits << "\n"
    << "lut_coeff_bits = " << g.lut_coeff_bits << "\n"
    << "rounding = " << rounding_name(g.rounding) << "\n"
    << "interp_taps = " << taps_text(fi) << "\n"
    << "interp_coeff_bits = " << fi.coeff_format.total_bits << "\n"
    << "interp_coeff_frac = " << fi.coeff_format.frac_bits << "\n\n"
    << "[cordic]\n"
    << "data_bits = " << g.cordic.data_bits << "\n"
    << "iterations = " << g.cordic.iterations << "\n"
    << "phase_bits = " << g.cordic.phase_bits << "\n"
    << "angle_bits = " << g.cordic.angle_bits << "\n"
    << "guard_bits = " << g.cordic.guard_bits << "\n\n"
    << "[analyzer]\n"
    << "decim = " << a.decim << "\n"
    << "l_avg = " << a.l_avg << "\n"
    << "demod_mode = " << to_string(a.demod_mode) << "\n"
    << "accumulator_width_bits = " << a.accumulator_width_bits << "\n"
    << "polyphase = " << (a.polyphase ? "true" : "false") << "\n"
    << "channelizer_taps = " << taps_text(fc) << "\n"
    << "channelizer_coeff_bits = " << fc.coeff_format.total_bits << "\n"
    << "channelizer_coeff_frac = " << fc.coeff_format.frac_bits << "\n\n"
    << "[sweep]\n"
    << "bits = " << join(c.sweep.bits) << "\n"
    << "iterations = " << join(c.sweep.iterations) << "\n\n"
    << "[tones]\n"
    << "; tN = band,tone,freq_word,amplitude_raw (Q2.16)\n";
  for (std::size_t k = 0; k < c.tones.size(); ++k) {
    const auto& t = c.tones[k];
    o << "t" << k << " = " << t.band_index << "," << t.tone_index << "," << t.freq_word << "," << t.amplitude_code.raw()
      << "\n";
  }
  return o.str();
}

std::string config_hash(const ChainConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(dump_config(cfg))));
  return buf;
}

}  // namespace combtwin
