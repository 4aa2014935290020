#pragma once

// Fixed-point arithmetic substrate shared by every DSP block of the twin.
//
// All values are two's-complement signed integers ("raw") interpreted as
// raw / 2^frac_bits. Operations are exact on a 128-bit intermediate and only
// then reduced with the destination format's rounding and overflow policies,
// so results are bit-exact and independent of evaluation order.

#include <cstdint>
#include <string>

#include "combtwin/errors.hpp"

namespace combtwin {

enum class Overflow { Wrap, Saturate };
enum class Rounding { TruncateTowardNegInf, RoundHalfUp };

struct FxpFormat {
  int total_bits = 16;
  int frac_bits = 15;
  Overflow overflow = Overflow::Saturate;
  Rounding rounding = Rounding::TruncateTowardNegInf;

  /// Builds and validates a format; throws ConfigError when widths are out of range.
  static FxpFormat make(int total_bits, int frac_bits, Overflow overflow = Overflow::Saturate,
                        Rounding rounding = Rounding::TruncateTowardNegInf);

  void validate() const;
  std::int64_t min_raw() const;
  std::int64_t max_raw() const;
  bool contains(std::int64_t raw) const { return raw >= min_raw() && raw <= max_raw(); }

  /// Short human-readable form, e.g. "Q1.15/sat/trunc".
  std::string to_string() const;

  friend bool operator==(const FxpFormat&, const FxpFormat&) = default;
};

namespace fxp {

using wide = __int128;

/// Two's-complement reduction modulo 2^bits.
inline std::int64_t wrap(wide v, int bits) {
  const auto u = static_cast<unsigned __int128>(v);
  if (bits >= 64) return static_cast<std::int64_t>(static_cast<std::uint64_t>(u));
  const std::uint64_t mask = (std::uint64_t{1} << bits) - 1;
  std::uint64_t r = static_cast<std::uint64_t>(u) & mask;
  if (r & (std::uint64_t{1} << (bits - 1))) r |= ~mask;
  return static_cast<std::int64_t>(r);
}

inline std::int64_t saturate(wide v, int bits) {
  const wide hi = (wide{1} << (bits - 1)) - 1;
  const wide lo = -(wide{1} << (bits - 1));
  if (v > hi) return static_cast<std::int64_t>(hi);
  if (v < lo) return static_cast<std::int64_t>(lo);
  return static_cast<std::int64_t>(v);
}

inline std::int64_t apply_overflow(wide v, const FxpFormat& f) {
  return f.overflow == Overflow::Wrap ? wrap(v, f.total_bits) : saturate(v, f.total_bits);
}

/// Arithmetic right shift by `shift` >= 0 with the given rounding.
inline wide shift_right(wide v, int shift, Rounding r) {
  if (shift <= 0) return v;
  if (r == Rounding::RoundHalfUp) v += wide{1} << (shift - 1);
  return v >> shift;
}

/// Shift-and-reduce helper used by the streaming blocks: (v >> shift) then overflow policy.
inline std::int64_t requantize(wide v, int shift, const FxpFormat& out) {
  return apply_overflow(shift_right(v, shift, out.rounding), out);
}

}  // namespace fxp

class FxpValue {
 public:
  /// Throws ContractViolation if raw lies outside the format's range.
  FxpValue(std::int64_t raw, const FxpFormat& format);

  /// Reduces an arbitrary-width raw with the format's overflow policy.
  static FxpValue from_wide(fxp::wide raw, const FxpFormat& format);

  /// Quantizes a real number: scale by 2^frac, round per format policy, then overflow policy.
  static FxpValue quantize(double value, const FxpFormat& format);

  std::int64_t raw() const { return raw_; }
  const FxpFormat& format() const { return format_; }

  friend bool operator==(const FxpValue&, const FxpValue&) = default;

 private:
  std::int64_t raw_;
  FxpFormat format_;
};

/// Left shifts applied to each operand before adding, stated at the call site.
struct Realign {
  int a_shift = 0;
  int b_shift = 0;
};

/// Exact sum, then the output overflow policy. Operands must land on out.frac_bits after realignment.
FxpValue fxp_add(const FxpValue& a, const FxpValue& b, const FxpFormat& out, Realign align = {});

/// Exact double-width product, right-shifted by (a.frac + b.frac - out.frac) with out's rounding.
FxpValue fxp_mul(const FxpValue& a, const FxpValue& b, const FxpFormat& out);

double fxp_to_float(const FxpValue& a);

/// One complex baseband sample; both components share a format.
class IqSample {
 public:
  IqSample(const FxpValue& i, const FxpValue& q);
  const FxpValue& i() const { return i_; }
  const FxpValue& q() const { return q_; }
  const FxpFormat& format() const { return i_.format(); }

 private:
  FxpValue i_;
  FxpValue q_;
};

/// ceil(log2(n)) for n >= 1.
int ceil_log2(std::uint64_t n);

}  // namespace combtwin
