#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace combtwin {

using cplx = std::complex<double>;

/// True for N = 2^a * 5^b, N >= 1.
bool fft_supported(std::size_t n);

/// Mixed-radix (4, 2, 5) decimation-in-time plan. Reusable and safe to share between threads.
class FftPlan {
 public:
  /// Throws ConfigError for lengths that are not 2^a * 5^b.
  FftPlan(std::size_t n, bool inverse);

  /// Unnormalized transform; `in` and `out` must not alias.
  void execute(const cplx* in, cplx* out) const;
  std::size_t size() const { return n_; }

 private:
  void work(cplx* out, const cplx* in, std::size_t fstride, std::size_t stage) const;
  void bfly2(cplx* out, std::size_t fstride, std::size_t m) const;
  void bfly4(cplx* out, std::size_t fstride, std::size_t m) const;
  void bfly5(cplx* out, std::size_t fstride, std::size_t m) const;

  std::size_t n_;
  bool inverse_;
  std::vector<std::size_t> radix_, span_;  ///< per stage: p and the remaining length m
  std::vector<cplx> tw_;
};

std::vector<cplx> fft(std::span<const cplx> x);
/// Inverse including the 1/N factor, so ifft(fft(x)) == x.
std::vector<cplx> ifft(std::span<const cplx> x);

}  // namespace combtwin
