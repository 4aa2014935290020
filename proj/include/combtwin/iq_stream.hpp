#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "combtwin/fxp.hpp"

namespace combtwin {

/// Raw complex integer sample. The format lives on the owning stream, not per sample.
struct CInt {
  std::int64_t i = 0;
  std::int64_t q = 0;
  friend bool operator==(const CInt&, const CInt&) = default;
};

/// A block of complex samples sharing one fixed-point format and sample rate.
struct IqStream {
  FxpFormat format;
  double rate_hz = 0.0;
  std::vector<CInt> samples;

  std::size_t size() const { return samples.size(); }
  IqSample at(std::size_t n) const {
    return IqSample(FxpValue(samples[n].i, format), FxpValue(samples[n].q, format));
  }
  friend bool operator==(const IqStream&, const IqStream&) = default;
};

/// Writes `<stem>.bin` (little-endian interleaved i,q as int32 when the format fits, else int64)
/// and `<stem>.json` with format, rate, length and sample width.
void dump_tap(const IqStream& stream, const std::filesystem::path& stem, const std::string& tap_name);

/// Reads a tap previously written by dump_tap.
IqStream load_tap(const std::filesystem::path& stem);

}  // namespace combtwin
