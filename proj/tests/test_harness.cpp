#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>

#include "combtwin/config.hpp"
#include "combtwin/cordic.hpp"
#include "combtwin/errors.hpp"
#include "combtwin/harness.hpp"
#include "oracles.hpp"

using namespace combtwin;
namespace fs = std::filesystem;

namespace {

/// Desk geometry with a shorter capture: M = 640 keeps the spur lines on exact bins.
ChainConfig small(std::int64_t L) {
  ChainConfig c = builtin_config(L == 1024 ? "desk_a" : "desk_b");
  c.generator.l_acc = L;
  c.analyzer.l_avg = L;
  c.tones = default_tones(c.generator);
  c.acquisition_len = 640;
  c.scenario_name = "small_" + std::to_string(L);
  return c;
}

/// Level at frequency f, relative to the report's floor, in dB.
double excess_at(const Spectrum& s, const SpurReport& r, double f) {
  const auto bin = static_cast<std::size_t>(std::llround(f / s.bin_hz));
  return s.values.at(bin) - r.floor_dbc_per_hz;
}

bool has_line(const SpurReport& r, double f, double tol) {
  for (const auto& l : r.lines) {
    if (std::abs(l.freq_hz - f) < tol) return true;
  }
  return false;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("combtwin_test_harness_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("loopback with L = 1024 shows lines at fs/5 and 2fs/5 in amplitude and phase") {
  const auto cfg = small(1024);
  const auto r = run_loopback(cfg);
  const double fs = cfg.generator.band_rate_hz / 1024;
  REQUIRE(r.tones.size() == 8);
  REQUIRE(r.predicted.size() == 2);
  CHECK(r.predicted[0].freq_hz == doctest::Approx(fs / 5));
  for (const auto& t : r.tones) {
    CHECK(t.series.samples.size() == 640);
    for (const SpurReport* rep : {&t.amp_spurs, &t.phase_spurs}) {
      CHECK(has_line(*rep, fs / 5, 1e-6));
      CHECK(has_line(*rep, 2 * fs / 5, 1e-6));
    }
    CHECK(excess_at(t.amp_psd, t.amp_spurs, fs / 5) >= 10);
    CHECK(excess_at(t.phase_psd, t.phase_spurs, 2 * fs / 5) >= 10);
  }
}

TEST_CASE("loopback with L = 1020 has nothing at those bins") {
  const auto cfg = small(1020);
  const auto r = run_loopback(cfg);
  const double fs = cfg.generator.band_rate_hz / 1020;
  CHECK(r.predicted.empty());
  for (const auto& t : r.tones) {
    CHECK(t.amp_spurs.lines.empty());
    CHECK(t.phase_spurs.lines.empty());
    for (double f : {fs / 5, 2 * fs / 5}) {
      CHECK(excess_at(t.amp_psd, t.amp_spurs, f) <= 3);
      CHECK(excess_at(t.phase_psd, t.phase_spurs, f) <= 3);
    }
  }
}

TEST_CASE("zero-amplitude tones give all-zero series and no spur reports") {
  auto cfg = small(1024);
  for (auto& t : cfg.tones) t.amplitude_code = FxpValue(0, amplitude_format());
  const auto r = run_loopback(cfg);
  for (const auto& t : r.tones) {
    for (const auto& v : t.series.samples) CHECK(v == CInt{0, 0});
    CHECK(t.amp_spurs.lines.empty());
    CHECK(t.phase_spurs.lines.empty());
    CHECK(t.amp_psd.values.empty());
  }
}

TEST_CASE("full-scale configs need the long-run flag") {
  CHECK_THROWS_WITH_AS(run_loopback(builtin_config("full_65536")), doctest::Contains("long-run"), ConfigError);
  CHECK_THROWS_AS(float_oracle(builtin_config("full_65520")), ConfigError);
}

TEST_CASE("invalid configs are rejected before any compute") {
  auto cfg = small(1024);
  cfg.analyzer.l_avg = 0;
  CHECK_THROWS_AS(run_loopback(cfg), ConfigError);
}

TEST_CASE("float oracle") {
  SUBCASE("the fs/5 line is structural: present with only the interpolator quantized") {
    const auto cfg = small(1024);
    const double fs = cfg.generator.band_rate_hz / 1024;
    const auto r = float_oracle(cfg, {true});
    const auto fixed = run_loopback(cfg);
    REQUIRE(r.tones.size() == fixed.tones.size());
    for (std::size_t k = 0; k < r.tones.size(); ++k) {
      CHECK(has_line(r.tones[k].amp_spurs, fs / 5, 1e-6));
      CHECK(has_line(r.tones[k].phase_spurs, fs / 5, 1e-6));
      // the run is periodic, so quantization error lands on the same lines rather than on a floor
      CHECK(r.tones[k].amp_psd.values[16] < fixed.tones[k].amp_psd.values[16]);
    }
  }
  SUBCASE("L divisible by 5: no predicted lines, clean float spectrum") {
    auto cfg = small(1020);
    cfg.generator.l_acc = cfg.analyzer.l_avg = 1280;
    cfg.tones = default_tones(cfg.generator);
    const auto r = float_oracle(cfg);
    CHECK(r.predicted.empty());
    for (const auto& t : r.tones) {
      CHECK(t.amp_spurs.lines.empty());
      CHECK(t.phase_spurs.lines.empty());
    }
  }
  SUBCASE("on-grid neighbours vanish after the boxcar in double precision") {
    const auto cfg = builtin_config("demod_compare");
    const auto r = float_oracle(cfg);
    for (const auto& t : r.tones) {
      cplx mean = 0;
      for (auto v : t.float_series) mean += v;
      mean /= static_cast<double>(t.float_series.size());
      double worst = 0;
      for (auto v : t.float_series) worst = std::max(worst, std::abs(v - mean));
      CHECK(worst / std::abs(mean) < 1e-9);
    }
  }
}

TEST_CASE("cordic sweep") {
  const auto base = builtin_config("cordic_sweep");
  const auto rows = run_cordic_sweep({6, 10}, {3, 7, 10, 11}, base);
  REQUIRE(rows.size() == 4);  // n > b is skipped
  CHECK(rows[0].bits == 6);
  CHECK(rows[0].iterations == 3);

  SUBCASE("(6, 3) golden") {
    CHECK(rows[0].sinad_db == doctest::Approx(14.076092020305).epsilon(1e-9));
    CHECK(rows[0].sfdr_db == doctest::Approx(21.448566065912).epsilon(1e-9));
  }
  SUBCASE("golden SINAD agrees with a time-domain computation") {
    CordicConfig c = base.generator.cordic;
    c.data_bits = 6;
    c.iterations = 3;
    const Cordic cordic(c, base.generator.l_acc);
    const std::int64_t L = base.generator.l_acc, k = base.tones[0].freq_word;
    long double mean = 0, total = 0, re = 0, im = 0;
    std::vector<long double> x(static_cast<std::size_t>(L));
    for (std::int64_t n = 0; n < L; ++n) x[n] = static_cast<long double>(cordic((n * k) % L).i);
    for (auto v : x) mean += v / L;
    for (std::int64_t n = 0; n < L; ++n) {
      const long double a = 2 * std::numbers::pi_v<long double> * static_cast<long double>((n * k) % L) / L;
      re += (x[n] - mean) * std::cos(a);
      im += (x[n] - mean) * std::sin(a);
      total += (x[n] - mean) * (x[n] - mean);
    }
    const long double fund = 2 * (re * re + im * im) / L;
    const double sinad = static_cast<double>(10 * std::log10(fund / (total - fund)));
    CHECK(rows[0].sinad_db == doctest::Approx(sinad).epsilon(1e-9));
  }
  SUBCASE("10-bit rows") {
    const auto& r7 = rows[2];
    const auto& r10 = rows[3];
    REQUIRE(r7.iterations == 7);
    REQUIRE(r10.iterations == 10);
    CHECK(std::abs(r10.sfdr_db - 50.0) <= 2.0);
    CHECK(std::abs(r10.sfdr_db - r7.sfdr_db) <= 0.5);
    CHECK(std::abs((r10.sinad_db - r7.sinad_db) - 2.5) <= 1.0);
  }
  SUBCASE("bad base configs") {
    auto b = base;
    b.tones[0].freq_word = 4096;
    CHECK_THROWS_AS(run_cordic_sweep({10}, {10}, b), ConfigError);
  }
}

TEST_CASE("demod compare") {
  const auto c = run_demod_compare(builtin_config("demod_compare"));
  CHECK(std::abs(c.magnitude_ratio / (4 / std::numbers::pi) - 1) <= 0.02);
  CHECK(std::abs(c.phase_diff_rad) <= 0.01);
  CHECK(c.sine.post_residual_db <= 3);
  CHECK(c.square.post_residual_db <= 3);
  CHECK(c.square.pre_lines > c.sine.pre_lines);
  CHECK(c.target_word != c.interferer_word);
}

TEST_CASE("persisted runs are byte-identical across thread counts") {
  const auto cfg = small(1024);
  const auto out1 = scratch("t1"), out4 = scratch("t4");
  RunOptions o1, o4;
  o4.threads = 4;
  o4.chunk_band_samples = 3001;
  const auto m1 = persist(run_loopback(cfg, o1), out1);
  const auto m4 = persist(run_loopback(cfg, o4), out4);
  REQUIRE(m1.files == m4.files);
  CHECK(m1.config_hash == m4.config_hash);
  CHECK(m1.files.size() > 10);
  for (const auto& rel : m1.files) {
    CAPTURE(rel);
    CHECK(slurp(m1.dir / rel) == slurp(m4.dir / rel));
  }
  CHECK(slurp(m1.dir / "manifest.json") == slurp(m4.dir / "manifest.json"));
  CHECK(fs::exists(m1.dir / "run_stats.json"));
  CHECK_FALSE(fs::exists(out1 / (cfg.scenario_name + ".partial")));

  const auto reloaded = read_series_binary(m1.dir / "series.bin");
  REQUIRE(reloaded.size() == 8);
  CHECK(config_hash(load_config(m1.dir / "config.ini")) == m1.config_hash);
  fs::remove_all(out1);
  fs::remove_all(out4);
}

TEST_CASE("persist failures carry the path and leave nothing behind") {
  const auto base = scratch("blocked");
  fs::create_directories(base);
  std::ofstream(base / "file") << "x";
  const auto r = run_loopback(small(1020));
  CHECK_THROWS_AS(persist(r, base / "file"), IoError);
  CHECK_FALSE(fs::exists(base / "file" / r.scenario));
  fs::remove_all(base);
}

TEST_CASE("throughput counter") {
  const auto r = run_loopback(small(1024));
  CHECK(r.counters.full_rate_samples == (640 + 1) * 1024 * 8);
  MESSAGE("full-rate samples/s: " << r.counters.samples_per_s);
  CHECK(r.counters.samples_per_s >= 5e6);
}
