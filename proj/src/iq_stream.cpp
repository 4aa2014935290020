#include "combtwin/iq_stream.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "byte_io.hpp"

namespace combtwin {

namespace {

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
  auto p = stem;
  p += ext;
  return p;
}

}  // namespace

void dump_tap(const IqStream& stream, const std::filesystem::path& stem, const std::string& tap_name) {
  const bool narrow = stream.format.total_bits <= 32;
  const auto bin_path = with_ext(stem, ".bin");
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("cannot open " + bin_path.string() + " for writing");
  for (const auto& s : stream.samples) {
    if (narrow) {
      detail::put_le(bin, static_cast<std::int32_t>(s.i));
      detail::put_le(bin, static_cast<std::int32_t>(s.q));
    } else {
      detail::put_le(bin, s.i);
      detail::put_le(bin, s.q);
    }
  }
  if (!bin) throw IoError("write failed for " + bin_path.string());

  nlohmann::ordered_json meta;
  meta["tap"] = tap_name;
  meta["total_bits"] = stream.format.total_bits;
  meta["frac_bits"] = stream.format.frac_bits;
  meta["format"] = stream.format.to_string();
  meta["rate_hz"] = stream.rate_hz;
  meta["length"] = stream.samples.size();
  meta["sample_bytes"] = narrow ? 4 : 8;
  meta["layout"] = "interleaved i,q little-endian two's complement";
  const auto json_path = with_ext(stem, ".json");
  std::ofstream js(json_path);
  if (!js) throw IoError("cannot open " + json_path.string() + " for writing");
  js << meta.dump(2) << '\n';
  if (!js) throw IoError("write failed for " + json_path.string());
}

IqStream load_tap(const std::filesystem::path& stem) {
  const auto json_path = with_ext(stem, ".json");
  std::ifstream js(json_path);
  if (!js) throw IoError("cannot open " + json_path.string());
  nlohmann::json meta;
  try {
    js >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed tap metadata " + json_path.string() + ": " + e.what());
  }
  IqStream out;
  out.format = FxpFormat::make(meta.at("total_bits").get<int>(), meta.at("frac_bits").get<int>());
  out.rate_hz = meta.at("rate_hz").get<double>();
  const auto n = meta.at("length").get<std::size_t>();
  const int width = meta.at("sample_bytes").get<int>();

  const auto bin_path = with_ext(stem, ".bin");
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("cannot open " + bin_path.string());
  out.samples.resize(n);
  for (auto& s : out.samples) {
    bool ok = true;
    if (width == 4) {
      std::int32_t i = 0, q = 0;
      ok = detail::get_le(bin, i) && detail::get_le(bin, q);
      s = {i, q};
    } else {
      ok = detail::get_le(bin, s.i) && detail::get_le(bin, s.q);
    }
    if (!ok) throw IoError("truncated tap payload " + bin_path.string());
  }
  return out;
}

}  // namespace combtwin
