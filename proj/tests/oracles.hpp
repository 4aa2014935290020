#pragma once

// Reference computations used only by the tests. Each one is written the slow, obvious way
// and shares no code with the library.

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "combtwin/iq_stream.hpp"

#ifdef DOCTEST_LIBRARY_INCLUDED
namespace doctest {
template <>
struct StringMaker<combtwin::CInt> {
  static String convert(const combtwin::CInt& v) {
    return ("(" + std::to_string(v.i) + ", " + std::to_string(v.q) + ")").c_str();
  }
};
}  // namespace doctest
#endif

namespace oracle {

using cd = std::complex<double>;
using bigint = boost::multiprecision::cpp_int;

inline std::vector<cd> direct_dft(const std::vector<cd>& x) {
  const std::size_t n = x.size();
  std::vector<cd> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    long double re = 0, im = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const long double a = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>((k * t) % n) / n;
      re += x[t].real() * std::cos(a) - x[t].imag() * std::sin(a);
      im += x[t].real() * std::sin(a) + x[t].imag() * std::cos(a);
    }
    out[k] = {static_cast<double>(re), static_cast<double>(im)};
  }
  return out;
}

/// |sum e^{j 2 pi f n}| / L by explicit summation in long double.
inline double boxcar_direct(std::int64_t L, double f) {
  long double re = 0, im = 0;
  for (std::int64_t n = 0; n < L; ++n) {
    const long double a = 2.0L * std::numbers::pi_v<long double> * f * static_cast<long double>(n);
    re += std::cos(a);
    im += std::sin(a);
  }
  return static_cast<double>(std::sqrt(re * re + im * im) / static_cast<long double>(L));
}

/// Smallest p >= 1 with s[n] == s[n + p] for every n in [start, s.size() - p).
/// Only candidates with at least `min_reps` full repetitions after `start` are tried.
inline std::size_t brute_period(const std::vector<combtwin::CInt>& s, std::size_t start, std::size_t min_reps = 2) {
  const std::size_t avail = s.size() - start;
  for (std::size_t p = 1; p * min_reps <= avail; ++p) {
    bool ok = true;
    for (std::size_t n = start; n + p < s.size() && ok; ++n) ok = s[n] == s[n + p];
    if (ok) return p;
  }
  return 0;
}

/// Cycle length of x -> (x + inc) mod L starting from 0, by stepping until the state repeats.
inline std::int64_t accumulator_cycle(std::int64_t L, std::int64_t inc) {
  std::int64_t x = 0, n = 0;
  do {
    x = (x + inc) % L;
    ++n;
  } while (x != 0);
  return n;
}

inline std::vector<double> gaussian(std::size_t n, std::uint64_t seed, double sigma = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, sigma);
  std::vector<double> x(n);
  for (auto& v : x) v = d(rng);
  return x;
}

struct MomentsLd {
  long double mu = 0, sigma = 0;
};

/// Population mean and standard deviation in long double, two passes.
inline MomentsLd moments(const std::vector<double>& x) {
  long double m = 0;
  for (double v : x) m += v;
  m /= static_cast<long double>(x.size());
  long double ss = 0;
  for (double v : x) ss += (v - m) * (v - m);
  return {m, std::sqrt(ss / static_cast<long double>(x.size()))};
}

/// Indices a single-pass mu +- 5 sigma screen must flag.
inline std::vector<std::size_t> outliers(const std::vector<double>& x) {
  const auto [mu, sigma] = moments(x);
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (std::abs(x[k] - mu) > 5 * sigma) idx.push_back(k);
  }
  return idx;
}

}  // namespace oracle
