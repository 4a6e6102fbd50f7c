// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/volcore/bvox.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace baggagedet {

static_assert(std::endian::native == std::endian::little, "BVOX I/O assumes a little-endian host");

namespace {

using json = nlohmann::json;

template <class T>
void put(std::vector<std::byte>& out, T value) {
  const auto* p = reinterpret_cast<const std::byte*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

template <class T>
T get(std::span<const std::byte> bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

const char* provenance_name(Provenance p) {
  return p == Provenance::TipComposited ? "tip-composited" : "real-synthetic";
}

const char* energy_name(EnergyTag e) {
  switch (e) {
    case EnergyTag::Low: return "low";
    case EnergyTag::High: return "high";
    case EnergyTag::Dual: return "dual";
  }
  return "low";
}

}  // namespace

std::size_t dtype_size(BvoxDtype dtype) {
  switch (dtype) {
    case BvoxDtype::F32: return 4;
    case BvoxDtype::F64: return 8;
  }
  throw BvoxError(BvoxErrc::UnsupportedDtype, "unsupported BVOX dtype");
}

const char* to_string(BvoxErrc code) {
  switch (code) {
    case BvoxErrc::BadMagic: return "bad magic";
    case BvoxErrc::VersionMismatch: return "version mismatch";
    case BvoxErrc::UnsupportedDtype: return "unsupported dtype";
    case BvoxErrc::TruncatedPayload: return "truncated payload";
    case BvoxErrc::DimsMismatch: return "dims product mismatch";
    case BvoxErrc::Io: return "i/o error";
  }
  return "unknown";
}

std::vector<std::byte> encode_bvox(const Volume& v, BvoxDtype dtype) {
  const std::size_t n = v.voxels().size();
  std::vector<std::byte> out;
  out.reserve(kBvoxHeaderSize + n * dtype_size(dtype));
  for (char c : {'B', 'V', 'O', 'X'}) out.push_back(static_cast<std::byte>(c));
  put<std::uint8_t>(out, kBvoxVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(v.channels()));
  put<std::uint8_t>(out, 0);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(v.dims().d));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(v.dims().h));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(v.dims().w));
  const auto voxels = v.voxels();
  if (dtype == BvoxDtype::F32) {
    const auto* p = reinterpret_cast<const std::byte*>(voxels.data());
    out.insert(out.end(), p, p + n * sizeof(float));
  } else {
    for (float x : voxels) put<double>(out, static_cast<double>(x));
  }
  return out;
}

Volume decode_bvox(std::span<const std::byte> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "BVOX", 4) != 0) {
    throw BvoxError(BvoxErrc::BadMagic, "not a BVOX file (bad magic)");
  }
  if (bytes.size() < 5) throw BvoxError(BvoxErrc::TruncatedPayload, "BVOX header truncated");
  const auto version = get<std::uint8_t>(bytes, 4);
  if (version != kBvoxVersion) {
    throw BvoxError(BvoxErrc::VersionMismatch, "BVOX version " + std::to_string(version) + " is not supported");
  }
  if (bytes.size() < kBvoxHeaderSize) throw BvoxError(BvoxErrc::TruncatedPayload, "BVOX header truncated");
  const auto dtype_raw = get<std::uint8_t>(bytes, 5);
  if (dtype_raw > static_cast<std::uint8_t>(BvoxDtype::F64)) {
    throw BvoxError(BvoxErrc::UnsupportedDtype, "BVOX dtype " + std::to_string(dtype_raw) + " is not supported");
  }
  const auto dtype = static_cast<BvoxDtype>(dtype_raw);
  const int channels = get<std::uint8_t>(bytes, 6);
  Dims3 dims{static_cast<int>(get<std::uint32_t>(bytes, 8)), static_cast<int>(get<std::uint32_t>(bytes, 12)),
             static_cast<int>(get<std::uint32_t>(bytes, 16))};
  if (channels == 0 || dims.d <= 0 || dims.h <= 0 || dims.w <= 0) {
    throw BvoxError(BvoxErrc::DimsMismatch, "BVOX header declares an empty volume");
  }
  const std::size_t n = static_cast<std::size_t>(channels) * dims.count();
  const std::size_t payload = bytes.size() - kBvoxHeaderSize;
  const std::size_t expected = n * dtype_size(dtype);
  if (payload < expected) {
    throw BvoxError(BvoxErrc::TruncatedPayload,
                    "BVOX payload has " + std::to_string(payload) + " bytes, header needs " + std::to_string(expected));
  }
  if (payload > expected) {
    throw BvoxError(BvoxErrc::DimsMismatch, "BVOX payload has " + std::to_string(payload) +
                                                " bytes but dims product gives " + std::to_string(expected));
  }
  std::vector<float> voxels(n);
  const std::byte* src = bytes.data() + kBvoxHeaderSize;
  if (dtype == BvoxDtype::F32) {
    std::memcpy(voxels.data(), src, n * sizeof(float));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      double d;
      std::memcpy(&d, src + i * sizeof(double), sizeof(double));
      voxels[i] = static_cast<float>(d);
    }
  }
  return Volume(dims, channels, std::move(voxels));
}

std::filesystem::path annotation_path(const std::filesystem::path& volume_path) {
  auto p = volume_path;
  p.replace_extension(".ann.json");
  return p;
}

std::string annotations_to_json(const std::vector<Annotation>& anns, const VolumeMeta& meta) {
  json records = json::array();
  for (const auto& a : anns) {
    records.push_back({{"class_name", class_name(a.class_id)},
                       {"class_id", a.class_id},
                       {"instance_id", a.instance_id},
                       {"box", a.box.as_array()}});
  }
  json doc = {{"source_id", meta.source_id},
              {"provenance", provenance_name(meta.provenance)},
              {"energy", energy_name(meta.energy)},
              {"annotations", records}};
  return doc.dump(2) + "\n";
}

std::vector<Annotation> annotations_from_json(const std::string& text, VolumeMeta* meta) {
  const json doc = json::parse(text);
  const json& records = doc.is_array() ? doc : doc.at("annotations");
  std::vector<Annotation> out;
  for (const auto& r : records) {
    Annotation a;
    a.class_id = r.at("class_id").get<int>();
    a.instance_id = r.value("instance_id", static_cast<int>(out.size()));
    const auto c = r.at("box").get<std::vector<double>>();
    if (c.size() != 6) throw std::invalid_argument("annotation box must have 6 coordinates");
    a.box = checked_box(c[0], c[1], c[2], c[3], c[4], c[5]);
    out.push_back(a);
  }
  if (meta != nullptr && doc.is_object()) {
    meta->source_id = doc.value("source_id", std::string());
    meta->provenance =
        doc.value("provenance", std::string()) == "tip-composited" ? Provenance::TipComposited : Provenance::RealSynthetic;
    const auto e = doc.value("energy", std::string("low"));
    meta->energy = e == "dual" ? EnergyTag::Dual : (e == "high" ? EnergyTag::High : EnergyTag::Low);
  }
  return out;
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BvoxError(BvoxErrc::Io, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::byte> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw BvoxError(BvoxErrc::Io, "read failed for " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw BvoxError(BvoxErrc::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw BvoxError(BvoxErrc::Io, "write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void save_volume(const Volume& v, const std::filesystem::path& path, const std::vector<Annotation>& annotations,
                 BvoxDtype dtype) {
  write_file_bytes(path, encode_bvox(v, dtype));
  write_text_file(annotation_path(path), annotations_to_json(annotations, v.meta));
}

std::pair<Volume, std::vector<Annotation>> load_volume(const std::filesystem::path& path) {
  Volume v = decode_bvox(read_file_bytes(path));
  std::vector<Annotation> anns;
  const auto side = annotation_path(path);
  if (std::filesystem::exists(side)) anns = annotations_from_json(read_text_file(side), &v.meta);
  return {std::move(v), std::move(anns)};
}

}  // namespace baggagedet
