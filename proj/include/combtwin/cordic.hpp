#pragma once

#include <cstdint>
#include <vector>

#include "combtwin/fxp.hpp"
#include "combtwin/iq_stream.hpp"

namespace combtwin {

/// Rotation-mode CORDIC parameters. Widths left at -1 derive from data_bits.
struct CordicConfig {
  int data_bits = 10;   ///< output I/Q width b
  int iterations = 10;  ///< micro-rotations n
  int phase_bits = -1;  ///< accumulator phase is rounded to this many bits (default b-2)
  int angle_bits = -1;  ///< z datapath and arctan table width (default b)
  int guard_bits = 2;   ///< extra LSBs on the x/y datapath

  /// Copy with the derived defaults filled in; throws ConfigError on invalid combinations.
  CordicConfig resolved() const;

  FxpFormat output_format() const;

  friend bool operator==(const CordicConfig&, const CordicConfig&) = default;
};

/// K(n) = prod_{i<n} cos(atan 2^-i).
double cordic_gain(int iterations);

/// Sine/cosine generator for phases of an L-modulus accumulator.
///
/// The phase p, taken as signed in [-L/2, L/2], is rounded half away from zero to a phase_bits
/// word w. The CORDIC rotates by |w| (folded into [-pi/2, pi/2] with an output negation) and
/// conjugates for negative w, so cos/sin(-theta) is exactly the conjugate of cos/sin(theta).
/// x starts at (2^(b-1)-1) * K(n) on the guard-extended datapath so the rotation gain lands on
/// full scale. The words for 0 and pi/2 skip the micro-rotations. After n iterations the guard
/// bits are rounded off and the result saturated to b bits.
class Cordic {
 public:
  Cordic(const CordicConfig& cfg, std::int64_t modulus);

  CInt operator()(std::int64_t phase) const;

  const CordicConfig& config() const { return cfg_; }
  std::int64_t modulus() const { return modulus_; }
  FxpFormat output_format() const { return cfg_.output_format(); }

 private:
  CordicConfig cfg_;
  std::int64_t modulus_;
  std::int64_t x0_;
  std::vector<std::int64_t> atan_table_;
};

/// Precomputed CORDIC outputs for every phase in [0, L). Bit-identical to Cordic::operator().
class CordicTable {
 public:
  CordicTable(const CordicConfig& cfg, std::int64_t modulus);

  const CInt& operator[](std::int64_t phase) const { return table_[static_cast<std::size_t>(phase)]; }
  std::int64_t modulus() const { return static_cast<std::int64_t>(table_.size()); }
  FxpFormat output_format() const { return format_; }
  const CordicConfig& config() const { return cfg_; }

 private:
  CordicConfig cfg_;
  FxpFormat format_;
  std::vector<CInt> table_;
};

/// Single-sample entry point; throws ContractViolation when phase is outside [0, L).
IqSample cordic_sincos(std::int64_t phase, std::int64_t modulus, const CordicConfig& cfg);

}  // namespace combtwin
