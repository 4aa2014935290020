#include "combtwin/comb_analyzer.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "byte_io.hpp"
#include "parallel.hpp"

namespace combtwin {

std::string to_string(DemodMode m) { return m == DemodMode::SineDdc ? "SineDdc" : "SquareWave"; }

DemodMode parse_demod_mode(const std::string& s) {
  if (s == "sine" || s == "SineDdc") return DemodMode::SineDdc;
  if (s == "square" || s == "SquareWave") return DemodMode::SquareWave;
  throw ConfigError("analyzer.demod_mode must be SineDdc or SquareWave, got '" + s + "'");
}

int AnalyzerConfig::required_accumulator_bits(const GeneratorConfig& gen) const {
  const int ref_bits = gen.cordic.resolved().data_bits;
  return gen.wideband_format().total_bits + ref_bits + 1 + ceil_log2(static_cast<std::uint64_t>(l_avg));
}

void AnalyzerConfig::validate(const GeneratorConfig& gen) const {
  if (decim != gen.upsample) throw ConfigError("analyzer.decim must equal generator.upsample");
  if (l_avg < 1) throw ConfigError("analyzer.l_avg must be >= 1");
  if (accumulator_width_bits > 64) throw ConfigError("analyzer.accumulator_width_bits must be <= 64");
  const int need = required_accumulator_bits(gen);
  if (accumulator_width_bits < need) {
    throw ConfigError("analyzer.accumulator_width_bits must be >= " + std::to_string(need) + " for this datapath");
  }
  const FilterSpec f = effective_channelizer_filter(gen);
  f.validate("analyzer.channelizer_filter");
  const int w = gen.wideband_format().total_bits;
  if (w + gen.lut_coeff_bits > 63) throw ConfigError("generator.lut_coeff_bits: channelizer mixer product exceeds 64 bits");
  double abs_sum = 0;
  for (auto t : f.taps) abs_sum += std::abs(static_cast<double>(t));
  if (w - 1 + std::log2(abs_sum) > 62) {
    throw ConfigError("analyzer.channelizer_filter: FIR accumulator would exceed 64 bits");
  }
}

FilterSpec AnalyzerConfig::effective_channelizer_filter(const GeneratorConfig& gen) const {
  if (!channelizer_filter.empty()) return channelizer_filter;
  return default_channelizer_filter(gen.band_spacing_hz / 2 / gen.full_rate_hz());
}

Channelizer::Channelizer(const GeneratorConfig& gen, const AnalyzerConfig& an, int band, const FxpFormat& in_format,
                         bool polyphase)
    : fmt_(in_format),
      polyphase_(polyphase),
      decim_(an.decim),
      mix_(make_rotation_lut(gen.shifter_lut_len, gen.band_shift_step(band), -1, gen.lut_coeff_bits),
           gen.lut_coeff_bits - 1, in_format),
      reshift_(make_rotation_lut(gen.down_shift_lut_len(), 1, +1, gen.lut_coeff_bits), gen.lut_coeff_bits - 1,
               in_format) {
  const FilterSpec f = an.effective_channelizer_filter(gen);
  taps_ = f.taps;
  shift_ = f.coeff_format.frac_bits;
  const std::size_t depth = (taps_.size() + static_cast<std::size_t>(decim_) - 1) / static_cast<std::size_t>(decim_);
  branches_.assign(static_cast<std::size_t>(decim_), std::vector<std::int64_t>(depth, 0));
  for (std::size_t k = 0; k < taps_.size(); ++k) branches_[k % static_cast<std::size_t>(decim_)][k / static_cast<std::size_t>(decim_)] = taps_[k];
  // Pad history so every branch can reach back its full depth.
  hist_.assign(depth * static_cast<std::size_t>(decim_) - 1, CInt{});
}

void Channelizer::filter_reference(const std::vector<CInt>& buf, std::size_t n_new, std::vector<CInt>& out) {
  const std::size_t base = hist_.size();
  const std::size_t T = taps_.size();
  for (std::size_t j = 0; j < n_new; ++j) {
    const CInt* x = buf.data() + base + j;
    std::int64_t si = 0, sq = 0;
    for (std::size_t k = 0; k < T; ++k) {
      si += taps_[k] * x[-static_cast<std::ptrdiff_t>(k)].i;
      sq += taps_[k] * x[-static_cast<std::ptrdiff_t>(k)].q;
    }
    const CInt y{fxp::requantize(si, shift_, fmt_), fxp::requantize(sq, shift_, fmt_)};
    if ((seen_ + j) % static_cast<std::uint64_t>(decim_) == 0) out.push_back(y);
  }
}

void Channelizer::filter_polyphase(const std::vector<CInt>& buf, std::size_t n_new, std::vector<CInt>& out) {
  const std::size_t base = hist_.size();
  const auto D = static_cast<std::size_t>(decim_);
  const std::size_t depth = branches_.front().size();
  std::size_t j = static_cast<std::size_t>((D - seen_ % D) % D);
  for (; j < n_new; j += D) {
    const CInt* x = buf.data() + base + j;
    std::int64_t si = 0, sq = 0;
    for (std::size_t p = 0; p < D; ++p) {
      const std::int64_t* e = branches_[p].data();
      const CInt* xp = x - static_cast<std::ptrdiff_t>(p);
      for (std::size_t m = 0; m < depth; ++m) {
        si += e[m] * xp[-static_cast<std::ptrdiff_t>(m * D)].i;
        sq += e[m] * xp[-static_cast<std::ptrdiff_t>(m * D)].q;
      }
    }
    out.push_back({fxp::requantize(si, shift_, fmt_), fxp::requantize(sq, shift_, fmt_)});
  }
}

void Channelizer::process(std::span<const CInt> wideband, std::vector<CInt>& out) {
  mixed_.clear();
  mixed_.reserve(hist_.size() + wideband.size());
  mixed_.insert(mixed_.end(), hist_.begin(), hist_.end());
  const std::size_t base = mixed_.size();
  mixed_.insert(mixed_.end(), wideband.begin(), wideband.end());
  mix_.process(std::span<CInt>(mixed_).subspan(base));

  const std::size_t first = out.size();
  if (polyphase_) {
    filter_polyphase(mixed_, wideband.size(), out);
  } else {
    filter_reference(mixed_, wideband.size(), out);
  }
  reshift_.process(std::span<CInt>(out).subspan(first));

  seen_ += wideband.size();
  hist_.assign(mixed_.end() - static_cast<std::ptrdiff_t>(hist_.size()), mixed_.end());
}

ToneAnalyzer::ToneAnalyzer(const ToneConfig& tone, const GeneratorConfig& gen, const AnalyzerConfig& an,
                           const FxpFormat& in_format, std::shared_ptr<const CordicTable> table)
    : table_(std::move(table)), modulus_(gen.l_acc) {
  series_.band_index = tone.band_index;
  series_.tone_index = tone.tone_index;
  series_.freq_word = tone.freq_word;
  series_.l_avg = an.l_avg;
  series_.rate_hz = gen.band_rate_hz / static_cast<double>(an.l_avg);
  series_.mode = an.demod_mode;
  series_.frac_bits = in_format.frac_bits + (an.demod_mode == DemodMode::SineDdc ? table_->output_format().frac_bits : 0);
}

void ToneAnalyzer::process(std::span<const CInt> subband) {
  const std::int64_t inc = series_.freq_word;
  const std::int64_t L = series_.l_avg;
  const bool square = series_.mode == DemodMode::SquareWave;
  for (const CInt& x : subband) {
    const CInt r = (*table_)[phase_];
    if (square) {
      const std::int64_t sc = r.i >= 0 ? 1 : -1;
      const std::int64_t ss = r.q >= 0 ? 1 : -1;
      acc_i_ += sc * x.i + ss * x.q;
      acc_q_ += sc * x.q - ss * x.i;
    } else {
      acc_i_ += x.i * r.i + x.q * r.q;
      acc_q_ += x.q * r.i - x.i * r.q;
    }
    phase_ += inc;
    if (phase_ >= modulus_) phase_ -= modulus_;
    if (++count_ == L) {
      series_.samples.push_back({acc_i_, acc_q_});
      acc_i_ = acc_q_ = 0;
      count_ = 0;
    }
  }
}

IqTimeSeries ToneAnalyzer::finish() const {
  IqTimeSeries s = series_;
  s.discarded_samples = count_;
  return s;
}

CombAnalyzer::CombAnalyzer(const GeneratorConfig& gen, const AnalyzerConfig& an, const std::vector<ToneConfig>& tones,
                           std::shared_ptr<const CordicTable> table) {
  gen.validate();
  an.validate(gen);
  validate_tones(gen, tones);
  const FxpFormat in = gen.wideband_format();
  for (int b = 0; b < gen.n_bands; ++b) {
    Band band{Channelizer(gen, an, b, in, an.polyphase), {}, {}};
    for (const auto& t : tones) {
      if (t.band_index == b) band.tones.emplace_back(t, gen, an, in, table);
    }
    bands_.push_back(std::move(band));
  }
  // Canonical order inside each band follows tone_index.
  for (int b = 0; b < gen.n_bands; ++b) {
    std::vector<ToneConfig> in_band;
    for (const auto& t : tones) {
      if (t.band_index == b) in_band.push_back(t);
    }
    std::vector<std::size_t> order(in_band.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return in_band[x].tone_index < in_band[y].tone_index; });
    auto& ta = bands_[static_cast<std::size_t>(b)].tones;
    std::vector<ToneAnalyzer> sorted;
    sorted.reserve(ta.size());
    for (auto k : order) sorted.push_back(std::move(ta[k]));
    ta = std::move(sorted);
  }
}

void CombAnalyzer::process(std::span<const CInt> wideband, int threads) {
  detail::parallel_for(bands_.size(), threads, [&](std::size_t b) {
    Band& band = bands_[b];
    if (band.tones.empty()) return;
    band.sub.clear();
    band.chan.process(wideband, band.sub);
    for (auto& t : band.tones) t.process(band.sub);
  });
}

void CombAnalyzer::clear_output() {
  for (auto& b : bands_) {
    for (auto& t : b.tones) t.clear_output();
  }
}

std::vector<IqTimeSeries> CombAnalyzer::finish() const {
  std::vector<IqTimeSeries> out;
  for (const auto& b : bands_) {
    for (const auto& t : b.tones) out.push_back(t.finish());
  }
  return out;
}

namespace {

IqStream run_channelizer(const IqStream& wideband, int band_index, const GeneratorConfig& gen, const AnalyzerConfig& an,
                         bool polyphase) {
  gen.validate();
  an.validate(gen);
  Channelizer ch(gen, an, band_index, wideband.format, polyphase);
  IqStream out{wideband.format, wideband.rate_hz / an.decim, {}};
  ch.process(wideband.samples, out.samples);
  return out;
}

void check_pair(const IqStream& subband, const IqStream& reference) {
  if (subband.size() != reference.size()) throw ConfigError("subband and reference must have equal length");
}

IqTimeSeries accumulate(const IqStream& subband, const IqStream& reference, std::int64_t l_avg, DemodMode mode) {
  if (l_avg < 1) throw ConfigError("l_avg must be >= 1");
  const std::vector<CInt> y = demodulate(subband, reference, mode);
  IqTimeSeries s;
  s.l_avg = l_avg;
  s.mode = mode;
  s.rate_hz = subband.rate_hz / static_cast<double>(l_avg);
  s.frac_bits = subband.format.frac_bits + (mode == DemodMode::SineDdc ? reference.format.frac_bits : 0);
  const std::size_t L = static_cast<std::size_t>(l_avg);
  const std::size_t full = y.size() / L;
  for (std::size_t m = 0; m < full; ++m) {
    CInt acc{};
    for (std::size_t n = m * L; n < (m + 1) * L; ++n) {
      acc.i += y[n].i;
      acc.q += y[n].q;
    }
    s.samples.push_back(acc);
  }
  s.discarded_samples = static_cast<std::int64_t>(y.size() - full * L);
  return s;
}

}  // namespace

IqStream channelize(const IqStream& wideband, int band_index, const GeneratorConfig& gen, const AnalyzerConfig& an) {
  return run_channelizer(wideband, band_index, gen, an, false);
}

IqStream channelize_polyphase(const IqStream& wideband, int band_index, const GeneratorConfig& gen,
                              const AnalyzerConfig& an) {
  return run_channelizer(wideband, band_index, gen, an, true);
}

IqStream reference_stream(std::int64_t freq_word, const GeneratorConfig& gen, std::size_t n_samples) {
  if (freq_word < 0 || freq_word >= gen.l_acc) throw ConfigError("freq_word must be in [0, l_acc)");
  const CordicTable table(gen.cordic, gen.l_acc);
  IqStream s{table.output_format(), gen.band_rate_hz, std::vector<CInt>(n_samples)};
  PhaseAccumulatorState st{gen.l_acc, 0, freq_word};
  for (auto& v : s.samples) {
    const PhaseStep step = phase_acc_step(st);
    v = table[step.phase_out];
    st = step.next;
  }
  return s;
}

std::vector<CInt> demodulate(const IqStream& subband, const IqStream& reference, DemodMode mode) {
  check_pair(subband, reference);
  std::vector<CInt> y(subband.size());
  for (std::size_t n = 0; n < y.size(); ++n) {
    const CInt x = subband.samples[n];
    const CInt r = reference.samples[n];
    if (mode == DemodMode::SquareWave) {
      const std::int64_t sc = r.i >= 0 ? 1 : -1;
      const std::int64_t ss = r.q >= 0 ? 1 : -1;
      y[n] = {sc * x.i + ss * x.q, sc * x.q - ss * x.i};
    } else {
      y[n] = {x.i * r.i + x.q * r.q, x.q * r.i - x.i * r.q};
    }
  }
  return y;
}

IqTimeSeries ddc_sine(const IqStream& subband, const IqStream& reference, std::int64_t l_avg) {
  return accumulate(subband, reference, l_avg, DemodMode::SineDdc);
}

IqTimeSeries ddc_square(const IqStream& subband, const IqStream& reference, std::int64_t l_avg) {
  return accumulate(subband, reference, l_avg, DemodMode::SquareWave);
}

double boxcar_response(std::int64_t L, double f_norm) {
  if (L < 1) throw ConfigError("boxcar length must be >= 1");
  const double den = static_cast<double>(L) * std::sin(std::numbers::pi * f_norm);
  if (std::abs(den) < 1e-300) return 1.0;
  return std::abs(std::sin(std::numbers::pi * f_norm * static_cast<double>(L)) / den);
}

namespace {

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ofstream f(path, mode);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  return f;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ifstream f(path, mode);
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <class T>
T parse_num(std::string_view s, const std::filesystem::path& path) {
  T v{};
  if constexpr (std::is_floating_point_v<T>) {
    try {
      return static_cast<T>(std::stod(std::string(s)));
    } catch (const std::exception&) {
      throw IoError(path.string() + ": bad number '" + std::string(s) + "'");
    }
  } else {
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
      throw IoError(path.string() + ": bad integer '" + std::string(s) + "'");
    }
  }
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

constexpr char kMagic[4] = {'C', 'T', 'I', 'Q'};
constexpr std::uint16_t kVersion = 1;

}  // namespace

void write_series_csv(const IqTimeSeries& s, const std::filesystem::path& path) {
  auto f = open_out(path);
  f << "# band_index=" << s.band_index << "\n"
    << "# tone_index=" << s.tone_index << "\n"
    << "# freq_word=" << s.freq_word << "\n"
    << "# l_avg=" << s.l_avg << "\n"
    << "# rate_hz=" << fmt_double(s.rate_hz) << "\n"
    << "# demod_mode=" << to_string(s.mode) << "\n"
    << "# frac_bits=" << s.frac_bits << "\n"
    << "# discarded_samples=" << s.discarded_samples << "\n"
    << "index,i,q\n";
  for (std::size_t n = 0; n < s.samples.size(); ++n) f << n << ',' << s.samples[n].i << ',' << s.samples[n].q << '\n';
  if (!f.flush()) throw IoError("write failed: " + path.string());
}

IqTimeSeries read_series_csv(const std::filesystem::path& path) {
  auto f = open_in(path);
  IqTimeSeries s;
  std::string line;
  bool header_seen = false;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    std::string_view v = trim(line);
    if (v.empty()) continue;
    if (v.front() == '#') {
      v.remove_prefix(1);
      v = trim(v);
      const auto eq = v.find('=');
      if (eq == std::string_view::npos) continue;
      const std::string_view key = trim(v.substr(0, eq));
      const std::string_view val = trim(v.substr(eq + 1));
      if (key == "band_index") s.band_index = parse_num<int>(val, path);
      else if (key == "tone_index") s.tone_index = parse_num<int>(val, path);
      else if (key == "freq_word") s.freq_word = parse_num<std::int64_t>(val, path);
      else if (key == "l_avg") s.l_avg = parse_num<std::int64_t>(val, path);
      else if (key == "rate_hz") s.rate_hz = parse_num<double>(val, path);
      else if (key == "demod_mode") s.mode = parse_demod_mode(std::string(val));
      else if (key == "frac_bits") s.frac_bits = parse_num<int>(val, path);
      else if (key == "discarded_samples") s.discarded_samples = parse_num<std::int64_t>(val, path);
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      if (v.find_first_not_of("0123456789-+, ") != std::string_view::npos) continue;  // column names
    }
    const auto c1 = v.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : v.find(',', c1 + 1);
    if (c2 == std::string_view::npos) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected index,i,q");
    }
    s.samples.push_back({parse_num<std::int64_t>(trim(v.substr(c1 + 1, c2 - c1 - 1)), path),
                         parse_num<std::int64_t>(trim(v.substr(c2 + 1)), path)});
  }
  return s;
}

void write_series_binary(const std::vector<IqTimeSeries>& series, const std::filesystem::path& path) {
  auto f = open_out(path, std::ios::binary);
  for (const auto& s : series) {
    const std::uint64_t n = s.samples.size();
    const std::uint32_t len = static_cast<std::uint32_t>(4 + 2 + 1 + 1 + 4 + 4 + 8 + 8 + 8 + 8 + n * 16);
    detail::put_le(f, len);
    f.write(kMagic, 4);
    detail::put_le(f, kVersion);
    detail::put_le(f, static_cast<std::uint8_t>(s.mode == DemodMode::SineDdc ? 0 : 1));
    detail::put_le(f, static_cast<std::uint8_t>(s.frac_bits));
    detail::put_le(f, static_cast<std::int32_t>(s.band_index));
    detail::put_le(f, static_cast<std::int32_t>(s.tone_index));
    detail::put_le(f, s.freq_word);
    detail::put_le(f, s.l_avg);
    detail::put_le(f, s.rate_hz);
    detail::put_le(f, n);
    for (const auto& v : s.samples) {
      detail::put_le(f, v.i);
      detail::put_le(f, v.q);
    }
  }
  if (!f.flush()) throw IoError("write failed: " + path.string());
}

std::vector<IqTimeSeries> read_series_binary(const std::filesystem::path& path) {
  auto f = open_in(path, std::ios::binary);
  std::vector<IqTimeSeries> out;
  std::uint32_t len = 0;
  while (detail::get_le(f, len)) {
    IqTimeSeries s;
    char magic[4];
    std::uint16_t version = 0;
    std::uint8_t mode = 0, frac = 0;
    std::int32_t band = 0, tone = 0;
    std::uint64_t n = 0;
    bool ok = static_cast<bool>(f.read(magic, 4)) && std::equal(magic, magic + 4, kMagic);
    ok = ok && detail::get_le(f, version) && version == kVersion;
    ok = ok && detail::get_le(f, mode) && detail::get_le(f, frac) && detail::get_le(f, band) && detail::get_le(f, tone) &&
         detail::get_le(f, s.freq_word) && detail::get_le(f, s.l_avg) && detail::get_le(f, s.rate_hz) &&
         detail::get_le(f, n);
    if (!ok || mode > 1 || len != 48 + n * 16) throw IoError(path.string() + ": malformed series record");
    s.mode = mode == 0 ? DemodMode::SineDdc : DemodMode::SquareWave;
    s.frac_bits = frac;
    s.band_index = band;
    s.tone_index = tone;
    s.samples.resize(n);
    for (auto& v : s.samples) {
      if (!detail::get_le(f, v.i) || !detail::get_le(f, v.q)) throw IoError(path.string() + ": truncated series record");
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace combtwin
