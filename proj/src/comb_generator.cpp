#include "combtwin/comb_generator.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "parallel.hpp"

namespace combtwin {

namespace {

bool near_integer(double x) { return std::abs(x - std::round(x)) <= 1e-9 * std::max(1.0, std::abs(x)); }

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

PhaseStep phase_acc_step(const PhaseAccumulatorState& s) {
  if (s.modulus < 1 || s.phase < 0 || s.phase >= s.modulus || s.increment < 0 || s.increment >= s.modulus) {
    throw ContractViolation("phase accumulator state out of range");
  }
  PhaseStep r{s, s.phase};
  std::int64_t p = s.phase + s.increment;
  if (p >= s.modulus) p -= s.modulus;
  r.next.phase = p;
  return r;
}

void GeneratorConfig::validate() const {
  require(n_bands >= 1, "generator.n_bands must be >= 1");
  require(tones_per_band >= 1, "generator.tones_per_band must be >= 1");
  require(l_acc >= 4, "generator.l_acc must be >= 4");
  require(band_rate_hz > 0, "generator.band_rate_hz must be > 0");
  require(band_spacing_hz > 0, "generator.band_spacing_hz must be > 0");
  require(upsample >= 1, "generator.upsample must be >= 1");
  require(shifter_lut_len >= 1, "generator.shifter_lut_len must be >= 1");
  require(tone_bits >= 4 && tone_bits <= 32, "generator.tone_bits must be in [4, 32]");
  require(lut_coeff_bits >= 4 && lut_coeff_bits <= 24, "generator.lut_coeff_bits must be in [4, 24]");
  const CordicConfig c = cordic.resolved();
  require(c.data_bits - 1 + 16 >= tone_bits - 1, "generator.tone_bits too wide for cordic.data_bits");
  const int auto_sum = tone_bits + ceil_log2(static_cast<std::uint64_t>(tones_per_band));
  require(sum_width_bits == 0 || sum_width_bits >= auto_sum,
          "generator.sum_width_bits must be 0 (auto) or >= " + std::to_string(auto_sum));
  require(wideband_format().total_bits <= 36, "generator: wideband datapath wider than 36 bits");
  effective_interp_filter().validate("generator.interp_filter");
  require(near_integer(band_rate_hz / (band_spacing_hz / 2)),
          "generator.band_spacing_hz: band_rate / (spacing/2) must be an integer");
  for (int b = 0; b < n_bands; ++b) {
    require(near_integer(band_center_hz(b) * shifter_lut_len / full_rate_hz()),
            "generator.shifter_lut_len: band " + std::to_string(b) + " center is not a multiple of full_rate/" +
                std::to_string(shifter_lut_len));
  }
}

std::int64_t GeneratorConfig::band_shift_step(int band) const {
  if (band < 0 || band >= n_bands) throw ConfigError("band_index " + std::to_string(band) + " out of range");
  return std::llround(band_center_hz(band) * shifter_lut_len / full_rate_hz());
}

int GeneratorConfig::down_shift_lut_len() const {
  return static_cast<int>(std::llround(band_rate_hz / (band_spacing_hz / 2)));
}

FilterSpec GeneratorConfig::effective_interp_filter() const {
  return interp_filter.empty() ? default_interp_filter(upsample) : interp_filter;
}

FxpFormat GeneratorConfig::tone_format() const { return FxpFormat{tone_bits, tone_bits - 1, Overflow::Saturate, rounding}; }

FxpFormat GeneratorConfig::band_format() const {
  const int w = sum_width_bits > 0 ? sum_width_bits : tone_bits + ceil_log2(static_cast<std::uint64_t>(tones_per_band));
  return FxpFormat{w, tone_bits - 1, Overflow::Saturate, rounding};
}

FxpFormat GeneratorConfig::wideband_format() const {
  FxpFormat f = band_format();
  f.total_bits += ceil_log2(static_cast<std::uint64_t>(n_bands));
  return f;
}

void validate_tones(const GeneratorConfig& cfg, const std::vector<ToneConfig>& tones) {
  for (std::size_t t = 0; t < tones.size(); ++t) {
    const auto& tc = tones[t];
    const std::string at = "tones[" + std::to_string(t) + "]";
    require(tc.band_index >= 0 && tc.band_index < cfg.n_bands, at + ".band_index out of range");
    require(tc.tone_index >= 0 && tc.tone_index < cfg.tones_per_band, at + ".tone_index out of range");
    require(tc.freq_word >= 0 && tc.freq_word < cfg.l_acc, at + ".freq_word must be in [0, l_acc)");
    require(tc.amplitude_code.format() == amplitude_format(), at + ".amplitude_code must be Q2.16");
    require(tc.amplitude_code.raw() >= 0 && tc.amplitude_code.raw() <= (1 << 16), at + ".amplitude_code must be in [0, 1]");
    for (std::size_t u = 0; u < t; ++u) {
      require(!(tones[u].band_index == tc.band_index && tones[u].tone_index == tc.tone_index),
              at + " duplicates band/tone index of tones[" + std::to_string(u) + "]");
    }
  }
}

std::int64_t waveform_period(std::int64_t l_acc, std::int64_t upsample, std::int64_t lut_len) {
  if (l_acc < 1 || upsample < 1 || lut_len < 1) throw ConfigError("waveform_period inputs must be >= 1");
  return std::lcm(l_acc * upsample, lut_len);
}

LutMixer::LutMixer(std::vector<CInt> lut, int coeff_frac, const FxpFormat& out)
    : lut_(std::move(lut)), shift_(coeff_frac), out_(out) {
  if (lut_.empty()) throw ConfigError("mixer LUT must not be empty");
}

void LutMixer::process(std::span<CInt> data) {
  const std::size_t len = lut_.size();
  for (auto& s : data) {
    const CInt c = lut_[pos_];
    const std::int64_t re = s.i * c.i - s.q * c.q;
    const std::int64_t im = s.i * c.q + s.q * c.i;
    s = {fxp::requantize(re, shift_, out_), fxp::requantize(im, shift_, out_)};
    if (++pos_ == len) pos_ = 0;
  }
}

Interpolator::Interpolator(const FilterSpec& filter, int upsample, const FxpFormat& out)
    : up_(upsample), out_(out), shift_(filter.coeff_format.frac_bits) {
  const int taps = static_cast<int>(filter.taps.size());
  depth_ = (taps + up_ - 1) / up_;
  branches_.assign(static_cast<std::size_t>(up_), std::vector<std::int64_t>(static_cast<std::size_t>(depth_), 0));
  for (int k = 0; k < taps; ++k) branches_[static_cast<std::size_t>(k % up_)][static_cast<std::size_t>(k / up_)] = filter.taps[static_cast<std::size_t>(k)];
  hist_.assign(static_cast<std::size_t>(depth_ - 1), CInt{});
}

void Interpolator::process(std::span<const CInt> in, std::vector<CInt>& out) {
  std::vector<CInt> buf;
  buf.reserve(hist_.size() + in.size());
  buf.insert(buf.end(), hist_.begin(), hist_.end());
  buf.insert(buf.end(), in.begin(), in.end());
  const std::size_t base = out.size();
  out.resize(base + in.size() * static_cast<std::size_t>(up_));
  CInt* dst = out.data() + base;
  const std::size_t d = static_cast<std::size_t>(depth_);
  for (std::size_t n = 0; n < in.size(); ++n) {
    const CInt* newest = buf.data() + n + d - 1;
    for (int p = 0; p < up_; ++p) {
      const std::int64_t* h = branches_[static_cast<std::size_t>(p)].data();
      std::int64_t si = 0, sq = 0;
      for (std::size_t i = 0; i < d; ++i) {
        si += h[i] * newest[-static_cast<std::ptrdiff_t>(i)].i;
        sq += h[i] * newest[-static_cast<std::ptrdiff_t>(i)].q;
      }
      *dst++ = {fxp::requantize(si, shift_, out_), fxp::requantize(sq, shift_, out_)};
    }
  }
  hist_.assign(buf.end() - static_cast<std::ptrdiff_t>(d - 1), buf.end());
}

ToneSource::ToneSource(const ToneConfig& tone, const GeneratorConfig& cfg, std::shared_ptr<const CordicTable> table)
    : table_(std::move(table)),
      state_{cfg.l_acc, 0, tone.freq_word},
      amp_(tone.amplitude_code.raw()),
      shift_(table_->output_format().frac_bits + amplitude_format().frac_bits - cfg.tone_format().frac_bits),
      out_(cfg.tone_format()) {
  if (table_->modulus() != cfg.l_acc) throw ConfigError("CORDIC table modulus does not match generator.l_acc");
}

void ToneSource::accumulate(std::span<std::int64_t> acc_i, std::span<std::int64_t> acc_q) {
  const std::int64_t L = state_.modulus;
  const std::int64_t inc = state_.increment;
  std::int64_t p = state_.phase;
  for (std::size_t n = 0; n < acc_i.size(); ++n) {
    const CInt c = (*table_)[p];
    acc_i[n] += fxp::requantize(c.i * amp_, shift_, out_);
    acc_q[n] += fxp::requantize(c.q * amp_, shift_, out_);
    p += inc;
    if (p >= L) p -= L;
  }
  state_.phase = p;
}

void ToneSource::generate(std::span<CInt> out) {
  std::vector<std::int64_t> ai(out.size(), 0), aq(out.size(), 0);
  accumulate(ai, aq);
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = {ai[n], aq[n]};
}

BandGenerator::BandGenerator(const GeneratorConfig& cfg, int band, const std::vector<ToneConfig>& tones,
                             std::shared_ptr<const CordicTable> table)
    : band_format_(cfg.band_format()),
      down_(make_rotation_lut(cfg.down_shift_lut_len(), 1, -1, cfg.lut_coeff_bits), cfg.lut_coeff_bits - 1,
            cfg.band_format()),
      interp_(cfg.effective_interp_filter(), cfg.upsample, cfg.band_format()),
      shift_(make_rotation_lut(cfg.shifter_lut_len, cfg.band_shift_step(band), +1, cfg.lut_coeff_bits),
             cfg.lut_coeff_bits - 1, cfg.band_format()) {
  for (const auto& t : tones) {
    if (t.band_index == band) tones_.emplace_back(t, cfg, table);
  }
}

void BandGenerator::produce(std::size_t n_band_samples, std::vector<CInt>& out) {
  acc_i_.assign(n_band_samples, 0);
  acc_q_.assign(n_band_samples, 0);
  for (auto& t : tones_) t.accumulate(acc_i_, acc_q_);
  band_.resize(n_band_samples);
  for (std::size_t n = 0; n < n_band_samples; ++n) {
    band_[n] = {fxp::apply_overflow(acc_i_[n], band_format_), fxp::apply_overflow(acc_q_[n], band_format_)};
  }
  down_.process(band_);
  out.clear();
  interp_.process(band_, out);
  shift_.process(out);
}

CombGenerator::CombGenerator(const GeneratorConfig& cfg, const std::vector<ToneConfig>& tones) : cfg_(cfg) {
  cfg_.validate();
  validate_tones(cfg_, tones);
  table_ = std::make_shared<const CordicTable>(cfg_.cordic, cfg_.l_acc);
  bands_.reserve(static_cast<std::size_t>(cfg_.n_bands));
  for (int b = 0; b < cfg_.n_bands; ++b) bands_.emplace_back(cfg_, b, tones, table_);
  scratch_.resize(bands_.size());
}

void CombGenerator::produce(std::size_t n_band_samples, std::vector<CInt>& wideband, int threads) {
  detail::parallel_for(bands_.size(), threads, [&](std::size_t b) { bands_[b].produce(n_band_samples, scratch_[b]); });
  const FxpFormat f = output_format();
  const std::size_t n = n_band_samples * static_cast<std::size_t>(cfg_.upsample);
  wideband.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::int64_t si = 0, sq = 0;
    for (const auto& s : scratch_) {
      si += s[k].i;
      sq += s[k].q;
    }
    wideband[k] = {fxp::apply_overflow(si, f), fxp::apply_overflow(sq, f)};
  }
}

IqStream tone_generate(const ToneConfig& tone, const GeneratorConfig& cfg, std::size_t n_samples) {
  cfg.validate();
  validate_tones(cfg, {tone});
  ToneSource src(tone, cfg, std::make_shared<const CordicTable>(cfg.cordic, cfg.l_acc));
  IqStream s{cfg.tone_format(), cfg.band_rate_hz, std::vector<CInt>(n_samples)};
  src.generate(s.samples);
  return s;
}

IqStream band_sum(const std::vector<IqStream>& tones, int sum_width_bits) {
  if (tones.empty()) throw ConfigError("band_sum needs at least one stream");
  const FxpFormat in = tones.front().format;
  for (const auto& t : tones) {
    if (t.format != in || t.size() != tones.front().size()) throw ConfigError("band_sum inputs must share length and format");
  }
  const int need = in.total_bits + ceil_log2(tones.size());
  if (sum_width_bits != 0 && sum_width_bits < need) {
    throw ConfigError("band_sum width " + std::to_string(sum_width_bits) + " below required " + std::to_string(need));
  }
  IqStream out{FxpFormat{sum_width_bits ? sum_width_bits : need, in.frac_bits, in.overflow, in.rounding},
               tones.front().rate_hz, std::vector<CInt>(tones.front().size())};
  for (const auto& t : tones) {
    for (std::size_t n = 0; n < t.size(); ++n) {
      out.samples[n].i += t.samples[n].i;
      out.samples[n].q += t.samples[n].q;
    }
  }
  return out;
}

IqStream down_shift(const IqStream& band, const GeneratorConfig& cfg) {
  cfg.validate();
  LutMixer m(make_rotation_lut(cfg.down_shift_lut_len(), 1, -1, cfg.lut_coeff_bits), cfg.lut_coeff_bits - 1, band.format);
  IqStream out = band;
  m.process(out.samples);
  return out;
}

IqStream upsample_interp(const IqStream& band, const GeneratorConfig& cfg) {
  cfg.validate();
  Interpolator interp(cfg.effective_interp_filter(), cfg.upsample, band.format);
  IqStream out{band.format, band.rate_hz * cfg.upsample, {}};
  interp.process(band.samples, out.samples);
  return out;
}

IqStream band_shift(const IqStream& band, int band_index, const GeneratorConfig& cfg) {
  cfg.validate();
  LutMixer m(make_rotation_lut(cfg.shifter_lut_len, cfg.band_shift_step(band_index), +1, cfg.lut_coeff_bits),
             cfg.lut_coeff_bits - 1, band.format);
  IqStream out = band;
  m.process(out.samples);
  return out;
}

IqStream band_add(const std::vector<IqStream>& bands) {
  if (bands.empty()) throw ConfigError("band_add needs at least one stream");
  FxpFormat f = bands.front().format;
  for (const auto& b : bands) {
    if (b.format.frac_bits != f.frac_bits || b.size() != bands.front().size()) {
      throw ConfigError("band_add inputs must share length and frac_bits");
    }
    f.total_bits = std::max(f.total_bits, b.format.total_bits);
  }
  f.total_bits += ceil_log2(bands.size());
  IqStream out{f, bands.front().rate_hz, std::vector<CInt>(bands.front().size())};
  for (const auto& b : bands) {
    for (std::size_t n = 0; n < b.size(); ++n) {
      out.samples[n].i += b.samples[n].i;
      out.samples[n].q += b.samples[n].q;
    }
  }
  return out;
}

IqStream generate_wideband(const GeneratorConfig& cfg, const std::vector<ToneConfig>& tones, std::size_t n_band_samples,
                           int threads) {
  CombGenerator gen(cfg, tones);
  IqStream out{gen.output_format(), cfg.full_rate_hz(), {}};
  gen.produce(n_band_samples, out.samples, threads);
  return out;
}

}  // namespace combtwin
