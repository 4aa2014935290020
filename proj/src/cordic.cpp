#include "combtwin/cordic.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace combtwin {

CordicConfig CordicConfig::resolved() const {
  CordicConfig c = *this;
  if (c.data_bits < 4 || c.data_bits > 32) {
    throw ConfigError("cordic.data_bits must be in [4, 32], got " + std::to_string(c.data_bits));
  }
  if (c.phase_bits < 0) c.phase_bits = c.data_bits - 2;
  if (c.angle_bits < 0) c.angle_bits = c.data_bits;
  if (c.phase_bits < 2 || c.phase_bits > 40) {
    throw ConfigError("cordic.phase_bits must be in [2, 40], got " + std::to_string(c.phase_bits));
  }
  if (c.angle_bits < c.phase_bits || c.angle_bits > 48) {
    throw ConfigError("cordic.angle_bits must be in [phase_bits, 48], got " + std::to_string(c.angle_bits));
  }
  if (c.iterations < 1 || c.iterations > c.angle_bits) {
    throw ConfigError("cordic.iterations must be in [1, angle_bits], got " + std::to_string(c.iterations));
  }
  if (c.guard_bits < 0 || c.guard_bits > 16) {
    throw ConfigError("cordic.guard_bits must be in [0, 16], got " + std::to_string(c.guard_bits));
  }
  return c;
}

FxpFormat CordicConfig::output_format() const {
  return FxpFormat::make(data_bits, data_bits - 1, Overflow::Saturate, Rounding::RoundHalfUp);
}

double cordic_gain(int iterations) {
  double k = 1.0;
  for (int i = 0; i < iterations; ++i) k *= std::cos(std::atan(std::ldexp(1.0, -i)));
  return k;
}

Cordic::Cordic(const CordicConfig& cfg, std::int64_t modulus) : cfg_(cfg.resolved()), modulus_(modulus) {
  if (modulus < 4) throw ConfigError("phase accumulator modulus must be >= 4, got " + std::to_string(modulus));
  const double full_scale = std::ldexp(1.0, cfg_.data_bits - 1) - 1.0;
  x0_ = std::llround(full_scale * cordic_gain(cfg_.iterations) * std::ldexp(1.0, cfg_.guard_bits));
  atan_table_.resize(static_cast<std::size_t>(cfg_.iterations));
  const double angle_scale = std::ldexp(1.0, cfg_.angle_bits) / (2.0 * std::numbers::pi);
  for (int i = 0; i < cfg_.iterations; ++i) {
    atan_table_[static_cast<std::size_t>(i)] = std::llround(std::atan(std::ldexp(1.0, -i)) * angle_scale);
  }
}

CInt Cordic::operator()(std::int64_t phase) const {
  if (phase < 0 || phase >= modulus_) {
    throw ContractViolation("cordic phase " + std::to_string(phase) + " outside [0, " + std::to_string(modulus_) + ")");
  }
  const int P = cfg_.phase_bits;
  // Signed phase in [-L/2, L/2], rounded half away from zero onto P bits so that
  // word(L - p) == -word(p).
  const std::int64_t sp = 2 * phase > modulus_ ? phase - modulus_ : phase;
  const fxp::wide num = fxp::wide{sp < 0 ? -sp : sp} << (P + 1);
  const auto mag = static_cast<std::int64_t>((num / modulus_ + 1) / 2);
  std::int64_t w = sp < 0 ? -mag : mag;
  // Rotate by |theta| and conjugate afterwards: cos/sin(-theta) = conj(cos/sin(theta)) holds exactly.
  const bool conj = w < 0;
  if (conj) w = -w;
  const std::int64_t quarter = std::int64_t{1} << (P - 2);
  const std::int64_t half = std::int64_t{1} << (P - 1);
  bool negate = false;
  if (w > quarter) {
    w -= half;
    negate = true;
  }

  std::int64_t z = w << (cfg_.angle_bits - P);
  std::int64_t x = x0_;
  std::int64_t y = 0;
  const std::int64_t full = ((std::int64_t{1} << (cfg_.data_bits - 1)) - 1) << cfg_.guard_bits;
  // Cardinal angles bypass the micro-rotations, whose residual would otherwise leak into the null component.
  const int n_iter = (w == 0 || w == quarter) ? 0 : cfg_.iterations;
  if (w == 0) x = full;
  if (w == quarter) x = 0, y = full;
  for (int i = 0; i < n_iter; ++i) {
    const std::int64_t xs = x >> i;
    const std::int64_t ys = y >> i;
    if (z >= 0) {
      x -= ys;
      y += xs;
      z -= atan_table_[static_cast<std::size_t>(i)];
    } else {
      x += ys;
      y -= xs;
      z += atan_table_[static_cast<std::size_t>(i)];
    }
  }
  if (negate) {
    x = -x;
    y = -y;
  }
  if (conj) y = -y;
  const int g = cfg_.guard_bits;
  const int b = cfg_.data_bits;
  return {fxp::saturate(fxp::shift_right(x, g, Rounding::RoundHalfUp), b),
          fxp::saturate(fxp::shift_right(y, g, Rounding::RoundHalfUp), b)};
}

CordicTable::CordicTable(const CordicConfig& cfg, std::int64_t modulus)
    : cfg_(cfg.resolved()), format_(cfg_.output_format()) {
  const Cordic cordic(cfg_, modulus);
  table_.resize(static_cast<std::size_t>(modulus));
  for (std::int64_t p = 0; p < modulus; ++p) table_[static_cast<std::size_t>(p)] = cordic(p);
}

IqSample cordic_sincos(std::int64_t phase, std::int64_t modulus, const CordicConfig& cfg) {
  const Cordic cordic(cfg, modulus);
  const CInt v = cordic(phase);
  const FxpFormat f = cordic.output_format();
  return IqSample(FxpValue(v.i, f), FxpValue(v.q, f));
}

}  // namespace combtwin
