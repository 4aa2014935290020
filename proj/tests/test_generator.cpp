#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "combtwin/comb_generator.hpp"
#include "combtwin/config.hpp"
#include "combtwin/fft.hpp"
#include "oracles.hpp"

using namespace combtwin;

namespace {

GeneratorConfig small_gen(std::int64_t L, int bands = 1, int tones = 4) {
  GeneratorConfig g;
  g.l_acc = L;
  g.n_bands = bands;
  g.tones_per_band = tones;
  return g;
}

ToneConfig tone(int band, int idx, std::int64_t k, std::int64_t amp_raw = 16384) {
  return {band, idx, k, FxpValue(amp_raw, amplitude_format())};
}

IqStream constant(const FxpFormat& f, std::size_t n, CInt v) { return {f, 250e6, std::vector<CInt>(n, v)}; }

}  // namespace

TEST_CASE("phase accumulator wraps") {
  CHECK(phase_acc_step({65536, 65535, 1}).next.phase == 0);
  const auto s = phase_acc_step({65520, 65519, 2});
  CHECK(s.next.phase == 1);
  CHECK(s.phase_out == 65519);
  CHECK_THROWS_AS(phase_acc_step({65520, 65520, 1}), ContractViolation);
  CHECK_THROWS_AS(phase_acc_step({65520, 0, 65520}), ContractViolation);
}

TEST_CASE("phase accumulator period matches cycle detection") {
  for (auto [L, inc] : std::vector<std::pair<std::int64_t, std::int64_t>>{{65520, 65519}, {1024, 4}, {1020, 6}, {65536, 4099}}) {
    PhaseAccumulatorState st{L, 0, inc};
    std::int64_t n = 0;
    do {
      st = phase_acc_step(st).next;
      ++n;
    } while (st.phase != 0);
    CHECK(n == oracle::accumulator_cycle(L, inc));
    CHECK(n == L / std::gcd(L, inc));
  }
}

TEST_CASE("cordic gain range") {
  CHECK(cordic_gain(1) == doctest::Approx(std::cos(std::atan(1.0))));
  for (int n = 1; n <= 24; ++n) {
    CHECK(cordic_gain(n) > 0.607);
    CHECK(cordic_gain(n) <= 1.0);
  }
}

TEST_CASE("cordic cardinal phases") {
  for (int b : {6, 8, 10, 12}) {
    CordicConfig c;
    c.data_bits = b;
    c.iterations = b;
    const std::int64_t full = (std::int64_t{1} << (b - 1)) - 1;
    const std::int64_t L = 1024;
    const IqSample z = cordic_sincos(0, L, c);
    CHECK(std::abs(z.i().raw() - full) <= 1);
    CHECK(std::abs(z.q().raw()) <= 1);
    const IqSample q = cordic_sincos(L / 4, L, c);
    CHECK(std::abs(q.i().raw()) <= 2);
    CHECK(std::abs(q.q().raw() - full) <= 2);
  }
  CHECK_THROWS_AS(cordic_sincos(1024, 1024, CordicConfig{}), ContractViolation);
  CHECK_THROWS_AS(cordic_sincos(-1, 1024, CordicConfig{}), ContractViolation);
}

TEST_CASE("cordic conjugate symmetry") {
  for (std::int64_t L : {1020, 1024, 65520}) {
    const CordicTable t(CordicConfig{}, L);
    for (std::int64_t p = 1; p < L; ++p) {
      CHECK(std::abs(t[L - p].i - t[p].i) <= 1);
      CHECK(std::abs(t[L - p].q + t[p].q) <= 1);
    }
  }
}

TEST_CASE("cordic table equals the direct rotation") {
  CordicConfig c;
  c.data_bits = 8;
  c.iterations = 6;
  const Cordic direct(c, 1020);
  const CordicTable table(c, 1020);
  for (std::int64_t p = 0; p < 1020; ++p) CHECK(direct(p) == table[p]);
}

TEST_CASE("cordic amplitude error shrinks with iterations down to the quantization floor") {
  const std::int64_t L = 4096;
  for (int b : {8, 10, 12}) {
    const double full = std::ldexp(1.0, b - 1) - 1;
    double prev = 1e9;
    for (int n = 1; n <= b; ++n) {
      CordicConfig c;
      c.data_bits = b;
      c.iterations = n;
      const CordicTable t(c, L);
      double err = 0;
      for (std::int64_t p = 0; p < L; ++p) {
        const double e = std::hypot(double(t[p].i), double(t[p].q)) - full;
        err += e * e;
      }
      err = std::sqrt(err / static_cast<double>(L));
      INFO("b=" << b << " n=" << n << " rms amplitude error " << err);
      CHECK(err <= std::max(prev, 1.0));
      prev = err;
    }
    CHECK(prev < 1.0);
  }
}

TEST_CASE("cordic config validation") {
  CordicConfig c;
  c.iterations = 11;
  CHECK_THROWS_AS(c.resolved(), ConfigError);
  c.iterations = 0;
  CHECK_THROWS_AS(c.resolved(), ConfigError);
}

TEST_CASE("tone generator") {
  const auto g = small_gen(1024);
  SUBCASE("k = 0 is DC at the scaled maximum") {
    const IqStream s = tone_generate(tone(0, 0, 0, 65536), g, 64);
    for (const auto& v : s.samples) CHECK(v == CInt{511 << 6, 0});
  }
  SUBCASE("period L / gcd(L, k)") {
    const IqStream s = tone_generate(tone(0, 0, 4), g, 1024);
    CHECK(oracle::brute_period(s.samples, 0) == 256);
    const IqStream t = tone_generate(tone(0, 0, 51), g, 2048);
    CHECK(oracle::brute_period(t.samples, 0) == 1024);
  }
  SUBCASE("coprime words at 65536 repeat every 65536 samples") {
    const IqStream s = tone_generate(tone(0, 0, 4099), small_gen(65536), 2 * 65536);
    CHECK(oracle::brute_period(s.samples, 0) == 65536);
  }
  CHECK_THROWS_AS(tone_generate(tone(0, 0, 1024), g, 8), ConfigError);
  CHECK_THROWS_AS(tone_generate(tone(1, 0, 3), g, 8), ConfigError);
}

TEST_CASE("band_sum") {
  const FxpFormat f{16, 15, Overflow::Saturate, Rounding::TruncateTowardNegInf};
  SUBCASE("40 identical DC tones") {
    const std::vector<IqStream> in(40, constant(f, 16, {10, 0}));
    const IqStream s = band_sum(in);
    CHECK(s.format.total_bits == 22);
    for (const auto& v : s.samples) CHECK(v == CInt{400, 0});
  }
  SUBCASE("a tone plus its negation") {
    const IqStream a = tone_generate(tone(0, 0, 37), small_gen(1024), 512);
    IqStream b = a;
    for (auto& v : b.samples) v = {-v.i, -v.q};
    for (const auto& v : band_sum({a, b}).samples) CHECK(v == CInt{});
  }
  SUBCASE("two tones equal the sample-wise sum") {
    const auto g = small_gen(1024);
    const IqStream a = tone_generate(tone(0, 0, 3), g, 1024);
    const IqStream b = tone_generate(tone(0, 1, 5), g, 1024);
    const IqStream s = band_sum({a, b});
    for (std::size_t n = 0; n < s.size(); ++n) {
      CHECK(s.samples[n].i == a.samples[n].i + b.samples[n].i);
      CHECK(s.samples[n].q == a.samples[n].q + b.samples[n].q);
    }
  }
  CHECK_THROWS_AS(band_sum({constant(f, 4, {}), constant(f, 5, {})}), ConfigError);
  CHECK_THROWS_AS(band_sum({constant(f, 4, {}), constant(f, 4, {})}, 16), ConfigError);
}

TEST_CASE("down_shift") {
  const auto g = small_gen(1020);
  const FxpFormat f = g.band_format();
  SUBCASE("DC becomes a period-5 tone at -fb/5") {
    const IqStream out = down_shift(constant(f, 50, {1 << 14, 0}), g);
    CHECK(oracle::brute_period(out.samples, 0) == 5);
    std::vector<cplx> x(5);
    for (int n = 0; n < 5; ++n) x[static_cast<std::size_t>(n)] = {double(out.samples[n].i), double(out.samples[n].q)};
    const auto X = fft(x);
    CHECK(std::abs(X[4]) > 1e3 * std::abs(X[0]));
  }
  SUBCASE("entry 0 passes the input through") {
    const IqStream out = down_shift(constant(f, 1, {12345, -678}), g);
    CHECK(std::abs(out.samples[0].i - 12345) <= 1);
    CHECK(std::abs(out.samples[0].q + 678) <= 1);
  }
  SUBCASE("a tone at +fb/5 lands at DC") {
    const IqStream t = tone_generate(tone(0, 0, 204, 65536), g, 1020);
    IqStream in = t;
    in.format = f;
    const IqStream out = down_shift(in, g);
    std::int64_t lo_i = out.samples[0].i, hi_i = lo_i, lo_q = out.samples[0].q, hi_q = lo_q;
    for (const auto& v : out.samples) {
      lo_i = std::min(lo_i, v.i), hi_i = std::max(hi_i, v.i);
      lo_q = std::min(lo_q, v.q), hi_q = std::max(hi_q, v.q);
    }
    // The spread comes from the CORDIC: one 8-bit phase-word step at full scale plus a few
    // 10-bit output LSBs (64 tone LSBs each). The mixer adds nothing visible.
    const double phase_step = 32704.0 * 2 * std::numbers::pi / 256.0;
    CHECK(double(hi_i - lo_i) <= phase_step + 4 * 64);
    CHECK(double(hi_q - lo_q) <= phase_step + 4 * 64);
    CHECK(std::hypot(double(out.samples[0].i), double(out.samples[0].q)) > 30000);
  }
}

TEST_CASE("interpolator") {
  const auto g = small_gen(1024);
  const FxpFormat f = g.band_format();
  const FilterSpec h = g.effective_interp_filter();
  SUBCASE("zeros in, zeros out") {
    const IqStream out = upsample_interp(constant(f, 32, {}), g);
    CHECK(out.size() == 32 * 8);
    for (const auto& v : out.samples) CHECK(v == CInt{});
  }
  SUBCASE("impulse gives the taps") {
    IqStream in = constant(f, 16, {});
    in.samples[0] = {std::int64_t{1} << h.coeff_format.frac_bits, 0};
    const IqStream out = upsample_interp(in, g);
    for (std::size_t k = 0; k < h.taps.size(); ++k) CHECK(out.samples[k] == CInt{h.taps[k], 0});
    for (std::size_t k = h.taps.size(); k < out.size(); ++k) CHECK(out.samples[k] == CInt{});
  }
  SUBCASE("period P in, period U*P out after the transient") {
    const IqStream t = tone_generate(tone(0, 0, 64 * 3, 65536), g, 256);  // period 16
    IqStream in = t;
    in.format = f;
    const IqStream out = upsample_interp(in, g);
    const std::size_t transient = h.taps.size() - 1;
    std::vector<CInt> steady(out.samples.begin() + static_cast<std::ptrdiff_t>(transient), out.samples.end());
    CHECK(oracle::brute_period(steady, 0) == 8 * 16);
  }
  SUBCASE("chunked processing is seamless") {
    const IqStream t = tone_generate(tone(0, 0, 77, 65536), g, 300);
    Interpolator a(h, 8, f), b(h, 8, f);
    std::vector<CInt> whole, parts;
    a.process(t.samples, whole);
    std::span<const CInt> s(t.samples);
    b.process(s.subspan(0, 1), parts);
    b.process(s.subspan(1, 120), parts);
    b.process(s.subspan(121), parts);
    CHECK(whole == parts);
  }
}

TEST_CASE("band_shift") {
  const auto g = small_gen(1024, 10);
  const FxpFormat f = g.band_format();
  for (int b = 0; b < 10; ++b) CHECK(g.band_shift_step(b) == 2 * b + 1);
  CHECK_THROWS_AS(g.band_shift_step(10), ConfigError);
  const IqStream out = band_shift(constant(f, 400, {1 << 14, 0}), 0, g);
  CHECK(oracle::brute_period(out.samples, 0) == 40);
  std::vector<cplx> x(40);
  for (int n = 0; n < 40; ++n) x[static_cast<std::size_t>(n)] = {double(out.samples[n].i), double(out.samples[n].q)};
  const auto X = fft(x);
  const auto peak = std::max_element(X.begin(), X.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
  CHECK(peak - X.begin() == 1);  // 50 MHz at 2 GHz / 40
}

TEST_CASE("band 9 lands in 900-1000 MHz") {
  GeneratorConfig g = small_gen(1024, 10, 4);
  std::vector<ToneConfig> tones;
  for (const auto& t : default_tones(g)) {
    if (t.band_index == 9) tones.push_back(t);
  }
  const IqStream w = generate_wideband(g, tones, 1024 * 5 + 64);
  std::vector<cplx> x(40960);
  for (std::size_t n = 0; n < x.size(); ++n) x[n] = {double(w.samples[n + 512].i), double(w.samples[n + 512].q)};
  const auto X = fft(x);
  double in = 0, total = 0;
  for (std::size_t k = 0; k < X.size(); ++k) {
    const double fhz = 2e9 * static_cast<double>(k) / static_cast<double>(X.size());
    total += std::norm(X[k]);
    if (fhz >= 900e6 && fhz <= 1000e6) in += std::norm(X[k]);
  }
  CHECK(in / total > 0.999);
}

TEST_CASE("band_add") {
  const FxpFormat f{22, 15, Overflow::Saturate, Rounding::TruncateTowardNegInf};
  const IqStream one = tone_generate(tone(0, 0, 11), small_gen(1024), 64);
  IqStream a = one;
  a.format = f;
  CHECK(band_add({a}).samples == a.samples);
  const std::vector<IqStream> zeros(10, constant(f, 32, {}));
  const IqStream z = band_add(zeros);
  CHECK(z.format.total_bits == 26);
  for (const auto& v : z.samples) CHECK(v == CInt{});
}

TEST_CASE("waveform period") {
  CHECK(waveform_period(65536, 8, 40) == 2621440);
  CHECK(waveform_period(65536, 8, 40) == 65536LL * 8 * 5);
  CHECK(waveform_period(65520, 8, 40) == 524160);
  CHECK(waveform_period(1024, 8, 40) == 40960);
  CHECK(waveform_period(1020, 8, 40) == 8160);
}

TEST_CASE("wideband period equals lcm(L*U, 40) by direct comparison") {
  for (const char* name : {"desk_a", "desk_b"}) {
    const ChainConfig cfg = builtin_config(name);
    const auto& g = cfg.generator;
    const std::int64_t P = waveform_period(g.l_acc, g.upsample, g.shifter_lut_len);
    const std::size_t transient = 2048;  // covers the interpolator history
    const std::size_t n_band = (transient + 2 * static_cast<std::size_t>(P)) / 8 + 64;
    const IqStream w = generate_wideband(g, cfg.tones, n_band, 2);
    INFO(name);
    CHECK(oracle::brute_period(w.samples, transient) == static_cast<std::size_t>(P));
  }
}

TEST_CASE("wideband output does not depend on threads or chunking") {
  const ChainConfig cfg = builtin_config("desk_a");
  const IqStream a = generate_wideband(cfg.generator, cfg.tones, 3000, 1);
  const IqStream b = generate_wideband(cfg.generator, cfg.tones, 3000, 4);
  CHECK(a == b);
  CombGenerator gen(cfg.generator, cfg.tones);
  std::vector<CInt> all, chunk;
  for (std::size_t n : {1000, 7, 1993}) {
    gen.produce(n, chunk, 3);
    all.insert(all.end(), chunk.begin(), chunk.end());
  }
  CHECK(all == a.samples);
}

TEST_CASE("generator config validation names the key") {
  GeneratorConfig g = small_gen(1024);
  g.shifter_lut_len = 30;
  CHECK_THROWS_WITH_AS(g.validate(), doctest::Contains("generator.shifter_lut_len"), ConfigError);
  g = small_gen(1024);
  g.sum_width_bits = 10;
  CHECK_THROWS_WITH_AS(g.validate(), doctest::Contains("generator.sum_width_bits"), ConfigError);
  g = small_gen(1024);
  CHECK_THROWS_AS(validate_tones(g, {tone(0, 0, 3), tone(0, 0, 5)}), ConfigError);
  CHECK_THROWS_AS(validate_tones(g, {tone(0, 0, 3, 70000)}), ConfigError);
}
