// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "baggagedet/volcore/box.hpp"
#include "baggagedet/volcore/volume.hpp"

namespace baggagedet {

/// Integer down-scaling factor. Accepted range is 1..4.
struct ScaleConfig {
  int s = 3;
};

void validate(const ScaleConfig& cfg);

/// Output extent: ceil(dim / s) per axis.
Dims3 scaled_dims(const Dims3& dims, int s);

/// Block-mean down-sampling. Edge blocks average over the voxels they actually contain.
Volume resample(const Volume& v, const ScaleConfig& cfg);

/// Divides coordinates by s, clamps to [0, out_dims) and enforces a minimum extent of one voxel.
std::vector<Box3D> rescale_boxes(const std::vector<Box3D>& boxes, const ScaleConfig& cfg, const Dims3& out_dims);

struct PaddedVolume {
  Volume volume;
  std::array<int, 3> offset{0, 0, 0};
};

/// Zero-pads at the high end of each axis up to the next multiple of m. The origin never moves,
/// so the returned offset is always zero.
PaddedVolume pad_to_multiple(const Volume& v, int m);

Dims3 padded_dims(const Dims3& dims, int m);

}  // namespace baggagedet
