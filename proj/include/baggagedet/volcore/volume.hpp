// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace baggagedet {

/// Voxel extents in (D, H, W) = (z, y, x) order.
struct Dims3 {
  int d = 0;
  int h = 0;
  int w = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(d) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  int operator[](int axis) const { return axis == 0 ? d : (axis == 1 ? h : w); }
  int& operator[](int axis) { return axis == 0 ? d : (axis == 1 ? h : w); }
  friend bool operator==(const Dims3&, const Dims3&) = default;
};

enum class Provenance : std::uint8_t { RealSynthetic = 0, TipComposited = 1 };
enum class EnergyTag : std::uint8_t { Low = 0, High = 1, Dual = 2 };

struct VolumeMeta {
  std::string source_id;
  Provenance provenance = Provenance::RealSynthetic;
  EnergyTag energy = EnergyTag::Low;
};

/// Multi-channel voxel grid. Channel-major storage, z-major / y / x within a channel.
/// Intensities are dimensionless and expected in [0,1]; the constructor only enforces finiteness.
class Volume {
 public:
  Volume() = default;
  Volume(Dims3 dims, int channels, VolumeMeta meta = {});
  Volume(Dims3 dims, int channels, std::vector<float> voxels, VolumeMeta meta = {});

  const Dims3& dims() const { return dims_; }
  int channels() const { return channels_; }
  std::size_t channel_size() const { return dims_.count(); }
  bool empty() const { return voxels_.empty(); }

  std::span<const float> voxels() const { return voxels_; }
  std::span<float> voxels() { return voxels_; }
  std::span<const float> channel(int c) const {
    return std::span<const float>(voxels_).subspan(static_cast<std::size_t>(c) * channel_size(), channel_size());
  }
  std::span<float> channel(int c) {
    return std::span<float>(voxels_).subspan(static_cast<std::size_t>(c) * channel_size(), channel_size());
  }

  std::size_t index(int z, int y, int x) const {
    return (static_cast<std::size_t>(z) * dims_.h + static_cast<std::size_t>(y)) * dims_.w + static_cast<std::size_t>(x);
  }
  float at(int c, int z, int y, int x) const { return voxels_[c * channel_size() + index(z, y, x)]; }
  float& at(int c, int z, int y, int x) { return voxels_[c * channel_size() + index(z, y, x)]; }

  bool all_finite() const;

  VolumeMeta meta;

  friend bool operator==(const Volume& a, const Volume& b) {
    return a.dims_ == b.dims_ && a.channels_ == b.channels_ && a.voxels_ == b.voxels_;
  }

 private:
  Dims3 dims_{};
  int channels_ = 0;
  std::vector<float> voxels_;
};

/// Channel selection for dual-energy volumes: low = channel 0, high = channel 1, dual = both.
enum class ChannelMode { Low, High, Dual };

ChannelMode parse_channel_mode(const std::string& text);
std::string to_string(ChannelMode mode);
int channel_count(ChannelMode mode);

/// Returns the channels requested by `mode`. Low on a single-channel volume is the identity;
/// High or Dual require two channels.
Volume select_channels(const Volume& v, ChannelMode mode);

}  // namespace baggagedet
