// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/volcore/volume.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace baggagedet {

namespace {

void check_shape(const Dims3& dims, int channels) {
  if (dims.d < 1 || dims.h < 1 || dims.w < 1) {
    throw std::invalid_argument("volume dims must be >= 1 on every axis");
  }
  if (channels < 1 || channels > 255) throw std::invalid_argument("volume channel count must be in 1..255");
}

}  // namespace

Volume::Volume(Dims3 dims, int channels, VolumeMeta meta_in)
    : meta(std::move(meta_in)), dims_(dims), channels_(channels) {
  check_shape(dims, channels);
  voxels_.assign(static_cast<std::size_t>(channels) * dims.count(), 0.0f);
}

Volume::Volume(Dims3 dims, int channels, std::vector<float> voxels, VolumeMeta meta_in)
    : meta(std::move(meta_in)), dims_(dims), channels_(channels), voxels_(std::move(voxels)) {
  check_shape(dims, channels);
  if (voxels_.size() != static_cast<std::size_t>(channels) * dims.count()) {
    throw std::invalid_argument("voxel buffer length does not match channels * D * H * W");
  }
  if (!all_finite()) throw std::invalid_argument("volume intensities must be finite");
}

bool Volume::all_finite() const {
  return std::all_of(voxels_.begin(), voxels_.end(), [](float v) { return std::isfinite(v); });
}

ChannelMode parse_channel_mode(const std::string& text) {
  if (text == "low") return ChannelMode::Low;
  if (text == "high") return ChannelMode::High;
  if (text == "dual") return ChannelMode::Dual;
  throw std::invalid_argument("channel mode must be low|high|dual, got '" + text + "'");
}

std::string to_string(ChannelMode mode) {
  switch (mode) {
    case ChannelMode::Low: return "low";
    case ChannelMode::High: return "high";
    case ChannelMode::Dual: return "dual";
  }
  return "low";
}

int channel_count(ChannelMode mode) { return mode == ChannelMode::Dual ? 2 : 1; }

Volume select_channels(const Volume& v, ChannelMode mode) {
  if (mode == ChannelMode::Low && v.channels() == 1) return v;
  if (v.channels() < 2 && mode != ChannelMode::Low) {
    throw std::invalid_argument("channel mode '" + to_string(mode) + "' needs a dual-energy volume");
  }
  VolumeMeta meta = v.meta;
  if (mode == ChannelMode::Dual) {
    meta.energy = EnergyTag::Dual;
    std::vector<float> buf(v.voxels().begin(), v.voxels().begin() + 2 * v.channel_size());
    return Volume(v.dims(), 2, std::move(buf), meta);
  }
  const int c = mode == ChannelMode::Low ? 0 : 1;
  meta.energy = mode == ChannelMode::Low ? EnergyTag::Low : EnergyTag::High;
  auto src = v.channel(c);
  return Volume(v.dims(), 1, std::vector<float>(src.begin(), src.end()), meta);
}

}  // namespace baggagedet
