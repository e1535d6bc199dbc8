#ifndef ZIVOS_IO_HPP
#define ZIVOS_IO_HPP

// File formats shared by every tool:
//   * ZIVP probability maps: "ZIVP", u32 version, u32 H, u32 W, u32 C, then
//     H*W*C float32, all little-endian, row-major with the class index
//     varying fastest.
//   * Masks: binary PGM (P5), maxval 255, one byte per pixel = class id.
//   * Sequence manifests: JSON with paths relative to the manifest file.

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "zivos/core.hpp"

namespace zivos {

namespace fs = std::filesystem;

inline constexpr char kZivpMagic[4] = {'Z', 'I', 'V', 'P'};
inline constexpr std::uint32_t kZivpVersion = 1;
inline constexpr std::size_t kZivpHeaderBytes = 20;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32(const std::string& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  return v;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::io, "short write to " + path.string());
}

}  // namespace detail

/// Encodes an arbitrary H*W*C float payload. No probability checks, so
/// single-channel entropy maps go through here as well.
inline std::string encode_zivp(int height, int width, int channels, std::span<const float> values) {
  if (values.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
                           static_cast<std::size_t>(channels)) {
    throw Error(ErrorKind::shape_mismatch, "ZIVP payload does not match H*W*C");
  }
  std::string out(kZivpMagic, 4);
  out.reserve(kZivpHeaderBytes + values.size() * 4);
  detail::put_u32(out, kZivpVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(height));
  detail::put_u32(out, static_cast<std::uint32_t>(width));
  detail::put_u32(out, static_cast<std::uint32_t>(channels));
  for (float f : values) detail::put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

struct RawZivp {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> values;
};

inline RawZivp decode_zivp(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kZivpMagic, 4) != 0) {
    throw Error(ErrorKind::bad_magic, "missing ZIVP magic");
  }
  if (bytes.size() < kZivpHeaderBytes) {
    throw Error(ErrorKind::truncated, "ZIVP header is incomplete");
  }
  if (const auto version = detail::get_u32(bytes, 4); version != kZivpVersion) {
    throw Error(ErrorKind::version_mismatch, "unsupported ZIVP version " + std::to_string(version));
  }
  RawZivp raw;
  const auto h = detail::get_u32(bytes, 8);
  const auto w = detail::get_u32(bytes, 12);
  const auto c = detail::get_u32(bytes, 16);
  const std::uint64_t count = std::uint64_t{h} * w * c;
  const std::uint64_t payload = bytes.size() - kZivpHeaderBytes;
  if (payload < count * 4) {
    throw Error(ErrorKind::truncated, "ZIVP payload holds " + std::to_string(payload / 4) +
                                          " floats, header declares " + std::to_string(count));
  }
  if (payload > count * 4) {
    throw Error(ErrorKind::trailing_data, "ZIVP payload longer than declared dimensions");
  }
  raw.height = static_cast<int>(h);
  raw.width = static_cast<int>(w);
  raw.channels = static_cast<int>(c);
  raw.values.resize(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < raw.values.size(); ++i) {
    raw.values[i] = std::bit_cast<float>(detail::get_u32(bytes, kZivpHeaderBytes + 4 * i));
  }
  return raw;
}

inline std::string encode_probability_map(const ProbabilityMap& map) {
  return encode_zivp(map.height(), map.width(), map.classes(), map.values());
}

inline ProbabilityMap decode_probability_map(const std::string& bytes) {
  auto raw = decode_zivp(bytes);
  return ProbabilityMap(raw.height, raw.width, raw.channels, std::move(raw.values));
}

inline void save_probability_map(const ProbabilityMap& map, const fs::path& path) {
  detail::write_file(path, encode_probability_map(map));
}

inline ProbabilityMap load_probability_map(const fs::path& path) {
  return decode_probability_map(detail::read_file(path));
}

// --- PGM -------------------------------------------------------------------

inline std::string encode_pgm(int height, int width, std::span<const std::uint8_t> pixels) {
  if (pixels.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
    throw Error(ErrorKind::shape_mismatch, "PGM payload does not match dimensions");
  }
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
  return out;
}

inline std::string encode_mask_pgm(const LabelMask& mask) {
  return encode_pgm(mask.height(), mask.width(), mask.values());
}

inline LabelMask decode_mask_pgm(const std::string& bytes) {
  std::size_t pos = 0;
  auto skip_space_and_comments = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space_and_comments();
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw Error(ErrorKind::format, "malformed PGM header");
    return std::stol(bytes.substr(start, pos - start));
  };

  if (bytes.size() < 2 || bytes[0] != 'P') throw Error(ErrorKind::format, "not a PGM file");
  if (bytes[1] != '5') {
    throw Error(ErrorKind::format, std::string("unsupported PGM variant P") + bytes[1]);
  }
  pos = 2;
  const long width = read_int();
  const long height = read_int();
  const long maxval = read_int();
  if (maxval != 255) throw Error(ErrorKind::format, "PGM maxval must be 255");
  // Exactly one whitespace byte separates the header from the raster.
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw Error(ErrorKind::format, "malformed PGM header");
  }
  ++pos;
  const std::size_t expected = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const std::size_t payload = bytes.size() - pos;
  if (payload < expected) throw Error(ErrorKind::truncated, "PGM raster is truncated");
  if (payload > expected) throw Error(ErrorKind::trailing_data, "PGM raster has trailing bytes");
  std::vector<std::uint8_t> data(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return LabelMask(static_cast<int>(height), static_cast<int>(width), std::move(data));
}

inline void save_mask_pgm(const LabelMask& mask, const fs::path& path) {
  detail::write_file(path, encode_mask_pgm(mask));
}

inline LabelMask load_mask_pgm(const fs::path& path) {
  return decode_mask_pgm(detail::read_file(path));
}

/// Writes a binary mask with object pixels set to `value`.
inline LabelMask to_label_mask(const BinaryMask& mask, std::uint8_t value) {
  LabelMask out(mask.height(), mask.width());
  for (std::size_t i = 0; i < mask.size(); ++i) out.values()[i] = mask.values()[i] ? value : 0;
  return out;
}

// --- Manifest --------------------------------------------------------------

struct FrameEntry {
  fs::path prob;
  fs::path gt;
  std::optional<fs::path> image;
};

struct SequenceManifest {
  std::string name;
  std::optional<double> fps;
  std::vector<FrameEntry> frames;
  std::vector<ObjectId> objects;
  /// Generator parameters when the sequence came from the synthetic
  /// generator; null otherwise.
  nlohmann::json scenario;
  /// Directory the relative frame paths resolve against.
  fs::path base_dir;

  fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : base_dir / p; }
};

inline void validate_manifest(const SequenceManifest& m) {
  if (m.frames.empty()) throw Error(ErrorKind::invalid_argument, "manifest has no frames");
  if (m.objects.empty()) throw Error(ErrorKind::invalid_argument, "manifest has no objects");
  auto ids = m.objects;
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw Error(ErrorKind::invalid_argument, "manifest object ids are not unique");
  }
  if (ids.front() < 1) throw Error(ErrorKind::invalid_argument, "object ids must be positive");
  if (m.fps && !(*m.fps > 0.0)) throw Error(ErrorKind::invalid_argument, "fps must be positive");
}

inline SequenceManifest parse_manifest(const nlohmann::json& j, const fs::path& base_dir) {
  SequenceManifest m;
  try {
    m.name = j.at("name").get<std::string>();
    if (j.contains("fps") && !j.at("fps").is_null()) m.fps = j.at("fps").get<double>();
    m.objects = j.at("objects").get<std::vector<ObjectId>>();
    for (const auto& f : j.at("frames")) {
      FrameEntry e;
      e.prob = f.at("prob").get<std::string>();
      e.gt = f.at("gt").get<std::string>();
      if (f.contains("image") && !f.at("image").is_null()) e.image = f.at("image").get<std::string>();
      m.frames.push_back(std::move(e));
    }
    if (j.contains("scenario")) m.scenario = j.at("scenario");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, std::string("bad manifest: ") + e.what());
  }
  m.base_dir = base_dir;
  validate_manifest(m);
  return m;
}

inline nlohmann::json manifest_to_json(const SequenceManifest& m) {
  nlohmann::json j;
  j["name"] = m.name;
  if (m.fps) j["fps"] = *m.fps;
  j["objects"] = m.objects;
  auto frames = nlohmann::json::array();
  for (const auto& f : m.frames) {
    nlohmann::json e{{"prob", f.prob.generic_string()}, {"gt", f.gt.generic_string()}};
    if (f.image) e["image"] = f.image->generic_string();
    frames.push_back(std::move(e));
  }
  j["frames"] = std::move(frames);
  if (!m.scenario.is_null()) j["scenario"] = m.scenario;
  return j;
}

inline SequenceManifest load_manifest(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::format, path.string() + ": " + e.what());
  }
  return parse_manifest(j, path.parent_path());
}

inline void save_manifest(const SequenceManifest& m, const fs::path& path) {
  detail::write_file(path, manifest_to_json(m).dump(2) + "\n");
}

}  // namespace zivos

#endif  // ZIVOS_IO_HPP
