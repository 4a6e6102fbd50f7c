// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "baggagedet/core/rng.hpp"
#include "baggagedet/volcore/box.hpp"
#include "baggagedet/volcore/volume.hpp"

namespace baggagedet::augment {

enum class TransformKind : std::uint8_t { Flip = 0, Rotation = 1 };

/// One of the 12 augmentation transforms.
///   flips:     0 z, 1 y, 2 x, 3 z+y, 4 z+x, 5 y+x   (reflections across planes)
///   rotations: 0 +90 about z, 1 -90 about z, 2 +90 about y, 3 -90 about y, 4 +90 about x, 5 -90 about x
struct TransformId {
  TransformKind kind = TransformKind::Flip;
  int index = 0;

  friend bool operator==(const TransformId&, const TransformId&) = default;
};

inline constexpr int kTransformsPerKind = 6;

/// All 12 ids in canonical order: flips by index, then rotations by index.
std::array<TransformId, 12> all_transforms();
std::string to_string(const TransformId& t);

/// The inverse transform (flips are involutions; +90 and -90 about one axis are a pair).
TransformId inverse(const TransformId& t);

/// Voxel coordinate map: output axis a reads input axis perm[a], reversed when flip[a].
struct AxisMap {
  std::array<int, 3> perm{0, 1, 2};
  std::array<bool, 3> flip{false, false, false};
};

AxisMap axis_map(const TransformId& t);
Dims3 transformed_dims(const Dims3& in, const AxisMap& m);
/// Maps an input voxel coordinate to its output coordinate.
std::array<int, 3> map_voxel(const std::array<int, 3>& v, const Dims3& in, const AxisMap& m);
Box3D map_box(const Box3D& b, const Dims3& in, const AxisMap& m);

struct Augmented {
  Volume volume;
  std::vector<Box3D> boxes;
};

/// Applies one transform to all channels and to the boxes. Rotations swap two axes, so output
/// dims are permuted when those extents differ.
Augmented apply_transform(const Volume& v, const std::vector<Box3D>& boxes, const TransformId& t);

struct AugmentConfig {
  double p = 0.2;
  bool enabled_flips = true;
  bool enabled_rotations = true;
  std::uint64_t seed = 0;
};

void validate(const AugmentConfig& cfg);

struct RandomAugmentResult {
  Volume volume;
  std::vector<Box3D> boxes;
  std::vector<TransformId> applied;
};

/// Samples each enabled transform independently with probability p, in canonical order, and
/// applies the sampled ones left to right.
RandomAugmentResult random_augment(const Volume& v, const std::vector<Box3D>& boxes, const AugmentConfig& cfg,
                                   Rng& rng);

/// Transforms sampled for one draw, without touching any data.
std::vector<TransformId> sample_transforms(const AugmentConfig& cfg, Rng& rng);

/// Per-sample stream so that data loading order does not change results.
Rng sample_rng(const AugmentConfig& cfg, int epoch, int sample_index);

}  // namespace baggagedet::augment
