// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/synthtip/dataset.hpp"

#include <cstdio>
#include <exception>
#include <mutex>

#include "baggagedet/volcore/bvox.hpp"

namespace baggagedet::synth {

namespace {

constexpr int kReseedAttempts = 8;

BagSpec spec_with_seed(const DatasetSpec& spec, int index, int attempt) {
  BagSpec bag = spec.base;
  bag.seed = derive_seed(spec.base.seed, {static_cast<std::uint64_t>(index), static_cast<std::uint64_t>(attempt)});
  Rng rng = make_rng(bag.seed, {0xc0});
  bag.class_counts.assign(kDefaultNumClasses, 0);
  if (!spec.classes.empty()) {
    const int n = uniform_int(rng, spec.objects_min, spec.objects_max);
    for (int k = 0; k < n; ++k) {
      const int c = spec.classes[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(spec.classes.size()) - 1))];
      ++bag.class_counts[static_cast<std::size_t>(c)];
    }
  }
  return bag;
}

Bag make_tip_volume(const BagSpec& bag, float threshold) {
  BagSpec background = bag;
  background.class_counts.assign(kDefaultNumClasses, 0);
  Bag out = generate_bag(background);
  out.volume.meta.source_id = "tip-" + std::to_string(bag.seed);
  Rng rng = make_rng(bag.seed, {0x71b});
  int instance = 0;
  for (int c = 0; c < static_cast<int>(bag.class_counts.size()); ++c) {
    for (int k = 0; k < bag.class_counts[c]; ++k) {
      // isolated object scan: the target alone, no clutter, no noise
      BagSpec isolated = bag;
      isolated.class_counts.assign(kDefaultNumClasses, 0);
      isolated.class_counts[c] = 1;
      isolated.clutter_min = isolated.clutter_max = 0;
      isolated.noise_sigma = 0.0f;
      isolated.seed = derive_seed(bag.seed, {0x150, static_cast<std::uint64_t>(instance)});
      const Bag iso = generate_bag(isolated);
      const Signature sig = extract_signature(iso.volume, iso.annotations.at(0).box, threshold, c,
                                              "sig-" + std::to_string(isolated.seed));
      TipResult r = project_signature(out.volume, sig, rng);
      out.volume = std::move(r.volume);
      r.annotation.instance_id = instance++;
      out.annotations.push_back(r.annotation);
    }
  }
  out.volume.meta.provenance = Provenance::TipComposited;
  return out;
}

}  // namespace

bool is_tip_volume(const DatasetSpec& spec, int index) {
  if (spec.tip_fraction <= 0.0) return false;
  Rng rng = make_rng(spec.base.seed, {0x7195, static_cast<std::uint64_t>(index)});
  return uniform01(rng) < spec.tip_fraction;
}

BagSpec bag_spec_for(const DatasetSpec& spec, int index) { return spec_with_seed(spec, index, 0); }

Bag make_dataset_volume(const DatasetSpec& spec, int index) {
  const bool tip = is_tip_volume(spec, index);
  for (int attempt = 0;; ++attempt) {
    const BagSpec bag = spec_with_seed(spec, index, attempt);
    try {
      Bag b = tip ? make_tip_volume(bag, spec.signature_threshold) : generate_bag(bag);
      b.volume.meta.source_id = "vol_" + std::to_string(index);
      return b;
    } catch (const PlacementError&) {
      if (attempt + 1 >= kReseedAttempts) throw;
    }
  }
}

Manifest write_dataset(const DatasetSpec& spec, int count, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> names(static_cast<std::size_t>(count));
  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    try {
      char name[32];
      std::snprintf(name, sizeof(name), "vol_%04d.bvox", i);
      const Bag bag = make_dataset_volume(spec, i);
      save_volume(bag.volume, out_dir / name, bag.annotations);
      names[static_cast<std::size_t>(i)] = name;
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  Manifest m;
  m.base_dir = out_dir;
  for (auto& n : names) m.entries.push_back({n, std::nullopt, 0});
  write_manifest(m, out_dir / "manifest.txt");
  return m;
}

}  // namespace baggagedet::synth
