// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "baggagedet/volcore/box.hpp"
#include "baggagedet/volcore/volume.hpp"

namespace baggagedet {

// BVOX layout (little-endian):
//   "BVOX" | version u8 (=1) | dtype u8 | channels u8 | reserved u8 | D,H,W u32 x3 | payload
// Payload is channel-major, then z / y / x within each channel.

inline constexpr std::uint8_t kBvoxVersion = 1;
inline constexpr std::size_t kBvoxHeaderSize = 20;

enum class BvoxDtype : std::uint8_t { F32 = 0, F64 = 1 };

std::size_t dtype_size(BvoxDtype dtype);

enum class BvoxErrc {
  BadMagic,
  VersionMismatch,
  UnsupportedDtype,
  TruncatedPayload,
  DimsMismatch,
  Io,
};

const char* to_string(BvoxErrc code);

class BvoxError : public std::runtime_error {
 public:
  BvoxError(BvoxErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  BvoxErrc code() const { return code_; }

 private:
  BvoxErrc code_;
};

std::vector<std::byte> encode_bvox(const Volume& v, BvoxDtype dtype = BvoxDtype::F32);
Volume decode_bvox(std::span<const std::byte> bytes);

/// Writes the BVOX file plus its annotation sidecar (see annotation_path).
void save_volume(const Volume& v, const std::filesystem::path& path, const std::vector<Annotation>& annotations = {},
                 BvoxDtype dtype = BvoxDtype::F32);

/// Reads a BVOX file and, when present, its sidecar. Missing sidecar yields no annotations.
std::pair<Volume, std::vector<Annotation>> load_volume(const std::filesystem::path& path);

/// Sidecar path for a volume: "<dir>/<stem>.ann.json".
std::filesystem::path annotation_path(const std::filesystem::path& volume_path);

std::string annotations_to_json(const std::vector<Annotation>& anns, const VolumeMeta& meta);
std::vector<Annotation> annotations_from_json(const std::string& text, VolumeMeta* meta = nullptr);

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace baggagedet
