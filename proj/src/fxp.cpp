#include "combtwin/fxp.hpp"

#include <cmath>
#include <sstream>

namespace combtwin {

FxpFormat FxpFormat::make(int total_bits, int frac_bits, Overflow overflow, Rounding rounding) {
  FxpFormat f{total_bits, frac_bits, overflow, rounding};
  f.validate();
  return f;
}

void FxpFormat::validate() const {
  if (total_bits < 2 || total_bits > 64) {
    throw ConfigError("fixed-point total_bits must be in [2, 64], got " + std::to_string(total_bits));
  }
  if (frac_bits < 0 || frac_bits > total_bits) {
    throw ConfigError("fixed-point frac_bits must be in [0, total_bits], got " + std::to_string(frac_bits));
  }
}

std::int64_t FxpFormat::min_raw() const {
  if (total_bits == 64) return INT64_MIN;
  return -(std::int64_t{1} << (total_bits - 1));
}

std::int64_t FxpFormat::max_raw() const {
  if (total_bits == 64) return INT64_MAX;
  return (std::int64_t{1} << (total_bits - 1)) - 1;
}

std::string FxpFormat::to_string() const {
  std::ostringstream os;
  os << 'Q' << (total_bits - frac_bits) << '.' << frac_bits << '/'
     << (overflow == Overflow::Wrap ? "wrap" : "sat") << '/'
     << (rounding == Rounding::TruncateTowardNegInf ? "trunc" : "round");
  return os.str();
}

FxpValue::FxpValue(std::int64_t raw, const FxpFormat& format) : raw_(raw), format_(format) {
  format_.validate();
  if (!format_.contains(raw)) {
    throw ContractViolation("raw " + std::to_string(raw) + " outside range of " + format_.to_string());
  }
}

FxpValue FxpValue::from_wide(fxp::wide raw, const FxpFormat& format) {
  format.validate();
  return FxpValue(fxp::apply_overflow(raw, format), format);
}

FxpValue FxpValue::quantize(double value, const FxpFormat& format) {
  format.validate();
  const double scaled = std::ldexp(value, format.frac_bits);
  const double r = format.rounding == Rounding::RoundHalfUp ? std::floor(scaled + 0.5) : std::floor(scaled);
  // Clamp before the integer conversion; values this far out saturate or wrap identically.
  constexpr double kLimit = 1.7e38;
  const double c = std::fmax(-kLimit, std::fmin(kLimit, r));
  return from_wide(static_cast<fxp::wide>(c), format);
}

FxpValue fxp_add(const FxpValue& a, const FxpValue& b, const FxpFormat& out, Realign align) {
  out.validate();
  if (align.a_shift < 0 || align.b_shift < 0) {
    throw ConfigError("fxp_add realignment shifts must be non-negative");
  }
  if (a.format().frac_bits + align.a_shift != out.frac_bits ||
      b.format().frac_bits + align.b_shift != out.frac_bits) {
    throw ConfigError("fxp_add format mismatch: operands " + a.format().to_string() + " and " +
                      b.format().to_string() + " do not align to " + out.to_string() +
                      " with the stated shifts");
  }
  const fxp::wide sum = (fxp::wide{a.raw()} << align.a_shift) + (fxp::wide{b.raw()} << align.b_shift);
  return FxpValue::from_wide(sum, out);
}

FxpValue fxp_mul(const FxpValue& a, const FxpValue& b, const FxpFormat& out) {
  out.validate();
  const int shift = a.format().frac_bits + b.format().frac_bits - out.frac_bits;
  if (shift < 0) {
    throw ConfigError("fxp_mul would require a left shift of " + std::to_string(-shift) + " bits");
  }
  const fxp::wide product = fxp::wide{a.raw()} * fxp::wide{b.raw()};
  return FxpValue::from_wide(fxp::shift_right(product, shift, out.rounding), out);
}

double fxp_to_float(const FxpValue& a) { return std::ldexp(static_cast<double>(a.raw()), -a.format().frac_bits); }

IqSample::IqSample(const FxpValue& i, const FxpValue& q) : i_(i), q_(q) {
  if (!(i.format() == q.format())) throw ContractViolation("IqSample components must share one format");
}

int ceil_log2(std::uint64_t n) {
  int bits = 0;
  std::uint64_t v = 1;
  while (v < n) {
    v <<= 1;
    ++bits;
  }
  return bits;
}

}  // namespace combtwin
