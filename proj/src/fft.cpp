#include "combtwin/fft.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "combtwin/errors.hpp"

namespace combtwin {

bool fft_supported(std::size_t n) {
  if (n == 0) return false;
  while (n % 2 == 0) n /= 2;
  while (n % 5 == 0) n /= 5;
  return n == 1;
}

FftPlan::FftPlan(std::size_t n, bool inverse) : n_(n), inverse_(inverse) {
  if (!fft_supported(n)) {
    throw ConfigError("FFT length " + std::to_string(n) + " unsupported: must be 2^a * 5^b");
  }
  std::size_t m = n;
  while (m > 1) {
    const std::size_t p = m % 4 == 0 ? 4 : m % 2 == 0 ? 2 : 5;
    m /= p;
    radix_.push_back(p);
    span_.push_back(m);
  }
  tw_.resize(n);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double theta = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    tw_[k] = {std::cos(theta), std::sin(theta)};
  }
}

void FftPlan::execute(const cplx* in, cplx* out) const {
  if (n_ == 1) {
    out[0] = in[0];
    return;
  }
  work(out, in, 1, 0);
}

void FftPlan::work(cplx* out, const cplx* in, std::size_t fstride, std::size_t stage) const {
  const std::size_t p = radix_[stage];
  const std::size_t m = span_[stage];
  cplx* const begin = out;
  if (m == 1) {
    for (std::size_t k = 0; k < p; ++k) out[k] = in[k * fstride];
  } else {
    for (std::size_t k = 0; k < p; ++k) work(out + k * m, in + k * fstride, fstride * p, stage + 1);
  }
  switch (p) {
    case 2: bfly2(begin, fstride, m); break;
    case 4: bfly4(begin, fstride, m); break;
    default: bfly5(begin, fstride, m); break;
  }
}

void FftPlan::bfly2(cplx* out, std::size_t fstride, std::size_t m) const {
  cplx* out2 = out + m;
  for (std::size_t k = 0; k < m; ++k) {
    const cplx t = out2[k] * tw_[k * fstride];
    out2[k] = out[k] - t;
    out[k] += t;
  }
}

void FftPlan::bfly4(cplx* out, std::size_t fstride, std::size_t m) const {
  const std::size_t m2 = 2 * m, m3 = 3 * m;
  for (std::size_t k = 0; k < m; ++k, ++out) {
    const cplx s0 = out[m] * tw_[k * fstride];
    const cplx s1 = out[m2] * tw_[2 * k * fstride];
    const cplx s2 = out[m3] * tw_[3 * k * fstride];
    const cplx s5 = out[0] - s1;
    out[0] += s1;
    const cplx s3 = s0 + s2;
    const cplx s4 = s0 - s2;
    out[m2] = out[0] - s3;
    out[0] += s3;
    if (inverse_) {
      out[m] = {s5.real() - s4.imag(), s5.imag() + s4.real()};
      out[m3] = {s5.real() + s4.imag(), s5.imag() - s4.real()};
    } else {
      out[m] = {s5.real() + s4.imag(), s5.imag() - s4.real()};
      out[m3] = {s5.real() - s4.imag(), s5.imag() + s4.real()};
    }
  }
}

void FftPlan::bfly5(cplx* out, std::size_t fstride, std::size_t m) const {
  const cplx ya = tw_[fstride * m];
  const cplx yb = tw_[fstride * 2 * m];
  cplx* f0 = out;
  cplx* f1 = out + m;
  cplx* f2 = out + 2 * m;
  cplx* f3 = out + 3 * m;
  cplx* f4 = out + 4 * m;
  for (std::size_t u = 0; u < m; ++u) {
    const cplx s0 = f0[u];
    const cplx s1 = f1[u] * tw_[u * fstride];
    const cplx s2 = f2[u] * tw_[2 * u * fstride];
    const cplx s3 = f3[u] * tw_[3 * u * fstride];
    const cplx s4 = f4[u] * tw_[4 * u * fstride];
    const cplx s7 = s1 + s4, s10 = s1 - s4, s8 = s2 + s3, s9 = s2 - s3;
    f0[u] = s0 + s7 + s8;
    const cplx s5{s0.real() + s7.real() * ya.real() + s8.real() * yb.real(),
                  s0.imag() + s7.imag() * ya.real() + s8.imag() * yb.real()};
    const cplx s6{s10.imag() * ya.imag() + s9.imag() * yb.imag(), -s10.real() * ya.imag() - s9.real() * yb.imag()};
    f1[u] = s5 - s6;
    f4[u] = s5 + s6;
    const cplx s11{s0.real() + s7.real() * yb.real() + s8.real() * ya.real(),
                   s0.imag() + s7.imag() * yb.real() + s8.imag() * ya.real()};
    const cplx s12{-s10.imag() * yb.imag() + s9.imag() * ya.imag(), s10.real() * yb.imag() - s9.real() * ya.imag()};
    f2[u] = s11 + s12;
    f3[u] = s11 - s12;
  }
}

std::vector<cplx> fft(std::span<const cplx> x) {
  const FftPlan plan(x.size(), false);
  std::vector<cplx> out(x.size());
  plan.execute(x.data(), out.data());
  return out;
}

std::vector<cplx> ifft(std::span<const cplx> x) {
  const FftPlan plan(x.size(), true);
  std::vector<cplx> out(x.size());
  plan.execute(x.data(), out.data());
  const double scale = 1.0 / static_cast<double>(x.size());
  for (auto& v : out) v *= scale;
  return out;
}

}  // namespace combtwin
