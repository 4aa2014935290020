#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "combtwin/comb_analyzer.hpp"
#include "combtwin/comb_generator.hpp"
#include "combtwin/spectral.hpp"

namespace combtwin {

struct SweepConfig {
  std::vector<int> bits{6, 8, 10, 12};
  std::vector<int> iterations{3, 4, 5, 6, 7, 8, 9, 10, 11, 12};

  friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

/// Everything a scenario needs. Serialized as INI with sections
/// [harness] [generator] [cordic] [analyzer] [sweep] [tones].
struct ChainConfig {
  std::string scenario_name = "custom";
  GeneratorConfig generator;
  AnalyzerConfig analyzer;
  std::vector<ToneConfig> tones;
  std::size_t acquisition_len = 2560;  ///< M output samples per tone
  int warmup_windows = 1;              ///< extra leading windows generated and dropped (filter transients)
  std::uint64_t seed = 0;
  PsdOptions psd;
  double spur_threshold_db = 10.0;
  double arithmetic_floor_dbc = -280.0;
  bool full_scale = false;  ///< refuses to run without the long-run flag
  SweepConfig sweep;

  /// Throws ConfigError naming the offending key. Runs before any compute.
  void validate() const;
};

/// Odd words coprime to L_acc, spread evenly over [0, 0.4 L_acc) per band; amplitude 1/tones_per_band.
std::vector<ToneConfig> default_tones(const GeneratorConfig& gen);

std::vector<std::string> builtin_names();
bool is_builtin(const std::string& name);
ChainConfig builtin_config(const std::string& name);

ChainConfig parse_config(const std::string& text, const std::string& source = "<string>");
ChainConfig load_config(const std::filesystem::path& path);
/// Resolves a built-in name first, then a file path.
ChainConfig load_config_or_builtin(const std::string& name_or_path);

/// Canonical INI text; parse_config(dump_config(c)) reproduces c.
std::string dump_config(const ChainConfig& cfg);

/// FNV-1a 64 of the canonical dump, as 16 hex digits.
std::string config_hash(const ChainConfig& cfg);
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace combtwin
