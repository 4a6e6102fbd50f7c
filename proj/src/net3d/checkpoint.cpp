// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/net3d/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace baggagedet::net3d {

namespace {

constexpr char kMagic[4] = {'B', 'D', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <class V>
void put(std::ostream& os, const V& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <class V>
V get(std::istream& is) {
  V v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(V))) throw CheckpointError("checkpoint truncated");
  return v;
}

void put_floats(std::ostream& os, const std::vector<float>& v) {
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
}

void get_floats(std::istream& is, std::vector<float>& v) {
  if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float))))
    throw CheckpointError("checkpoint truncated");
}

}  // namespace

std::string to_json(const DetectorSpec& spec) {
  nlohmann::json j;
  j["model"] = nlohmann::json::parse(to_json(spec.model));
  j["anchors"] = {{"sizes", spec.anchors.base_sizes},
                  {"multipliers", spec.anchors.scale_multipliers},
                  {"levels", spec.anchors.levels}};
  j["scale"] = spec.scale.s;
  j["channels"] = to_string(spec.channels);
  j["match_iou"] = spec.match_iou;
  return j.dump();
}

DetectorSpec detector_spec_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  DetectorSpec spec;
  spec.model = model_config_from_json(j.at("model").dump());
  spec.anchors.base_sizes = j.at("anchors").at("sizes").get<std::vector<double>>();
  spec.anchors.scale_multipliers = j.at("anchors").at("multipliers").get<std::vector<double>>();
  spec.anchors.levels = j.at("anchors").at("levels").get<std::vector<int>>();
  spec.scale.s = j.at("scale").get<int>();
  spec.channels = parse_channel_mode(j.at("channels").get<std::string>());
  spec.match_iou = j.at("match_iou").get<double>();
  return spec;
}

void save_checkpoint(const std::filesystem::path& path, const DetectorSpec& spec, int epoch, Model<float>& model,
                     const Adam* optimizer) {
  const auto params = model.params();
  if (optimizer && optimizer->m.size() != params.size())
    throw std::invalid_argument("optimizer state does not match the model");
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("cannot open " + tmp + " for writing");
    os.write(kMagic, 4);
    put(os, kVersion);
    const std::string js = to_json(spec);
    put(os, static_cast<std::uint32_t>(js.size()));
    os.write(js.data(), static_cast<std::streamsize>(js.size()));
    put(os, static_cast<std::int32_t>(epoch));
    put(os, static_cast<std::int64_t>(optimizer ? optimizer->steps() : 0));
    put(os, static_cast<std::uint8_t>(optimizer ? 1 : 0));
    put(os, static_cast<std::uint32_t>(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& p = *params[i];
      put(os, static_cast<std::uint32_t>(p.name.size()));
      os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
      put(os, static_cast<std::uint32_t>(p.shape.size()));
      for (int d : p.shape) put(os, static_cast<std::int32_t>(d));
      put(os, static_cast<std::uint64_t>(p.size()));
      put_floats(os, p.value);
      if (optimizer) {
        put_floats(os, optimizer->m[i]);
        put_floats(os, optimizer->v[i]);
      }
    }
    if (!os) throw CheckpointError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw CheckpointError("not a checkpoint file");
  if (get<std::uint32_t>(is) != kVersion) throw CheckpointError("unsupported checkpoint version");
  const auto jlen = get<std::uint32_t>(is);
  std::string js(jlen, '\0');
  if (!is.read(js.data(), jlen)) throw CheckpointError("checkpoint truncated");
  DetectorSpec spec;
  try {
    spec = detector_spec_from_json(js);
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("bad checkpoint config: ") + e.what());
  }
  Checkpoint ck{spec, get<std::int32_t>(is), Model<float>(spec.model), std::nullopt};
  const auto steps = get<std::int64_t>(is);
  const bool has_opt = get<std::uint8_t>(is) != 0;
  auto params = ck.model.params();
  if (get<std::uint32_t>(is) != params.size()) throw CheckpointError("checkpoint parameter count mismatch");
  Adam opt(params);
  opt.t_ = steps;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    std::string name(get<std::uint32_t>(is), '\0');
    if (!is.read(name.data(), static_cast<std::streamsize>(name.size()))) throw CheckpointError("checkpoint truncated");
    std::vector<int> shape(get<std::uint32_t>(is));
    for (auto& d : shape) d = get<std::int32_t>(is);
    const auto count = get<std::uint64_t>(is);
    if (name != p.name || shape != p.shape || count != p.size())
      throw CheckpointError("checkpoint parameter mismatch at " + p.name);
    get_floats(is, p.value);
    if (has_opt) {
      get_floats(is, opt.m[i]);
      get_floats(is, opt.v[i]);
    }
  }
  if (has_opt) ck.optimizer = std::move(opt);
  return ck;
}

}  // namespace baggagedet::net3d
