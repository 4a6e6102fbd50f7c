// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "baggagedet/synthtip/synth.hpp"
#include "baggagedet/volcore/manifest.hpp"

namespace baggagedet::synth {

/// Dataset-level generator settings. Each bag draws its object count uniformly from
/// [objects_min, objects_max] and each object's class uniformly from the enabled classes.
/// A fraction of the bags is produced by 3D TIP: targets are rendered alone, extracted as
/// signatures, and projected into a clutter-only bag.
struct DatasetSpec {
  BagSpec base;
  int objects_min = 1;
  int objects_max = 3;
  std::vector<int> classes{0, 1, 2, 3, 4};
  double tip_fraction = 0.0;
  float signature_threshold = 0.05f;
};

/// BagSpec used for volume `index` of the dataset (deterministic in spec.base.seed and index).
BagSpec bag_spec_for(const DatasetSpec& spec, int index);

/// Whether volume `index` is TIP-composited.
bool is_tip_volume(const DatasetSpec& spec, int index);

/// Generates volume `index`. TIP volumes carry Provenance::TipComposited.
Bag make_dataset_volume(const DatasetSpec& spec, int index);

/// Writes `count` volumes as <out>/vol_XXXX.bvox (+ sidecars) and an unassigned manifest
/// <out>/manifest.txt. Volumes are generated in parallel; output is independent of thread count.
Manifest write_dataset(const DatasetSpec& spec, int count, const std::filesystem::path& out_dir);

}  // namespace baggagedet::synth
