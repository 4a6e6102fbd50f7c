// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "baggagedet/core/rng.hpp"
#include "baggagedet/volcore/box.hpp"
#include "baggagedet/volcore/volume.hpp"

namespace baggagedet::synth {

/// Raised when an object cannot be placed without collisions inside the attempt budget.
class PlacementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxPlacementAttempts = 100;

/// Procedural bag description. The five target classes are parametric stand-ins for real
/// threat items: bottle (hollow cylinder), handgun (L-shaped cuboid union), binocular (two
/// bridged parallel cylinders), glockframe (L-shaped frame at clutter-level contrast), ipod
/// (thin slab).
struct BagSpec {
  Dims3 dims{48, 48, 48};
  int channels = 1;
  int clutter_min = 4;
  int clutter_max = 10;
  float clutter_intensity_lo = 0.15f;
  float clutter_intensity_hi = 0.55f;
  float noise_sigma = 0.03f;
  /// Number of instances to insert, indexed by class id.
  std::vector<int> class_counts = std::vector<int>(kDefaultNumClasses, 0);
  std::uint64_t seed = 0;

  float clutter_mean() const { return 0.5f * (clutter_intensity_lo + clutter_intensity_hi); }
};

void validate(const BagSpec& spec);

struct Bag {
  Volume volume;
  std::vector<Annotation> annotations;
};

/// Deterministic in `spec`: same spec (including seed) gives bit-identical output.
/// Throws PlacementError when a target cannot be placed collision-free.
Bag generate_bag(const BagSpec& spec);

/// Occupancy masks of the inserted targets, in annotation order, each as a full-volume bitmap.
/// Used by tests to count pairwise collisions; generation itself does not keep them.
std::vector<std::vector<std::uint8_t>> target_masks(const BagSpec& spec);

/// Per-class base intensity and dual-energy material factor of the target solids.
float target_intensity(int class_id, const BagSpec& spec);
float material_factor(int class_id);

/// Tight masked sub-volume of an isolated object.
struct Signature {
  Volume voxels;                    // all channels, zero outside the mask
  std::vector<std::uint8_t> mask;   // 1 = occupied, same dims as voxels
  int class_id = 0;
  std::string source_id;

  const Dims3& dims() const { return voxels.dims(); }
  std::size_t occupied() const;
};

class EmptyMaskError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Largest 6-connected component of channel-0 voxels > threshold inside `seed_box`, cropped to
/// its tight box. Ties between equally sized components go to the one met first in raster order.
Signature extract_signature(const Volume& v, const Box3D& seed_box, float threshold, int class_id = 0,
                            std::string source_id = {});

struct TipOptions {
  float occupancy_threshold = 0.3f;
  double max_collision_fraction = 0.05;
  int max_attempts = kMaxPlacementAttempts;
};

struct TipResult {
  Volume volume;
  Annotation annotation;
  std::array<int, 3> offset{};
};

/// Inserts `sig` at a uniformly random position, retrying until the fraction of mask voxels
/// landing on occupied target voxels is within tolerance. Voxel-wise max blend under the mask.
TipResult project_signature(const Volume& target, const Signature& sig, Rng& rng, const TipOptions& opts = {});

/// Signature archive: <dir>/<name>.bvox (voxels), <dir>/<name>.mask.bvox, <dir>/<name>.json.
void save_signature(const Signature& sig, const std::filesystem::path& dir, const std::string& name);
Signature load_signature(const std::filesystem::path& dir, const std::string& name);
/// Names of all signatures stored in `dir`, sorted.
std::vector<std::string> list_signatures(const std::filesystem::path& dir);

}  // namespace baggagedet::synth
