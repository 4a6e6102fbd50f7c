// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <queue>

#include "../support/test_util.hpp"
#include "baggagedet/synthtip/dataset.hpp"
#include "baggagedet/synthtip/synth.hpp"
#include "baggagedet/volcore/bvox.hpp"

using namespace baggagedet;
using namespace baggagedet::synth;

namespace {

BagSpec empty_bag(std::uint64_t seed) {
  BagSpec s;
  s.clutter_min = s.clutter_max = 0;
  s.noise_sigma = 0.0f;
  s.seed = seed;
  return s;
}

bool inside(const Box3D& b, int z, int y, int x) {
  return b.lo[0] <= z && z < b.hi[0] && b.lo[1] <= y && y < b.hi[1] && b.lo[2] <= x && x < b.hi[2];
}

// Independent 6-connected labeling by BFS; returns the size of the largest component.
std::size_t largest_component(const Volume& v, float t) {
  const Dims3 d = v.dims();
  std::vector<int> label(d.count(), 0);
  std::size_t best = 0;
  int next = 0;
  for (int z = 0; z < d.d; ++z)
    for (int y = 0; y < d.h; ++y)
      for (int x = 0; x < d.w; ++x) {
        if (v.at(0, z, y, x) <= t || label[v.index(z, y, x)]) continue;
        ++next;
        std::size_t size = 0;
        std::queue<std::array<int, 3>> q;
        q.push({z, y, x});
        label[v.index(z, y, x)] = next;
        while (!q.empty()) {
          auto p = q.front();
          q.pop();
          ++size;
          static const int off[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
          for (const auto& o : off) {
            const int a = p[0] + o[0], b = p[1] + o[1], c = p[2] + o[2];
            if (a < 0 || b < 0 || c < 0 || a >= d.d || b >= d.h || c >= d.w) continue;
            if (v.at(0, a, b, c) <= t || label[v.index(a, b, c)]) continue;
            label[v.index(a, b, c)] = next;
            q.push({a, b, c});
          }
        }
        best = std::max(best, size);
      }
  return best;
}

}  // namespace

TEST_CASE("one bottle on an empty background") {
  BagSpec s = empty_bag(3);
  s.class_counts = {1, 0, 0, 0, 0};
  const Bag bag = generate_bag(s);
  REQUIRE(bag.annotations.size() == 1);
  CHECK(bag.annotations[0].class_id == 0);
  const Box3D& b = bag.annotations[0].box;
  const Dims3 d = bag.volume.dims();
  bool any_inside = false;
  for (int z = 0; z < d.d; ++z)
    for (int y = 0; y < d.h; ++y)
      for (int x = 0; x < d.w; ++x) {
        const float v = bag.volume.at(0, z, y, x);
        if (!inside(b, z, y, x)) {
          if (v != 0.0f) FAIL("nonzero voxel outside the annotation");
        } else {
          any_inside |= v > 0.0f;
        }
      }
  CHECK(any_inside);
}

TEST_CASE("generation is deterministic in the seed") {
  BagSpec s;
  s.channels = 2;
  s.class_counts = {1, 1, 1, 1, 1};
  s.seed = 77;
  const Bag a = generate_bag(s), b = generate_bag(s);
  CHECK(encode_bvox(a.volume) == encode_bvox(b.volume));
  CHECK(a.annotations == b.annotations);
  s.seed = 78;
  CHECK(!(generate_bag(s).volume == a.volume));
}

TEST_CASE("25 instances over five classes never collide and boxes are tight") {
  BagSpec s = empty_bag(11);
  s.dims = Dims3{96, 96, 96};
  s.clutter_min = 2;
  s.clutter_max = 6;
  s.class_counts = {5, 5, 5, 5, 5};
  const Bag bag = generate_bag(s);
  REQUIRE(bag.annotations.size() == 25);
  const auto masks = target_masks(s);
  REQUIRE(masks.size() == 25);
  std::vector<int> occupancy(s.dims.count(), 0);
  for (const auto& m : masks)
    for (std::size_t i = 0; i < m.size(); ++i) occupancy[i] += m[i];
  std::size_t collisions = 0;
  for (int o : occupancy) collisions += o > 1;
  CHECK(collisions == 0);
  for (std::size_t k = 0; k < masks.size(); ++k) {
    int lo[3] = {1 << 20, 1 << 20, 1 << 20}, hi[3] = {-1, -1, -1};
    for (int z = 0; z < s.dims.d; ++z)
      for (int y = 0; y < s.dims.h; ++y)
        for (int x = 0; x < s.dims.w; ++x)
          if (masks[k][(static_cast<std::size_t>(z) * s.dims.h + y) * s.dims.w + x]) {
            const int p[3] = {z, y, x};
            for (int a = 0; a < 3; ++a) {
              lo[a] = std::min(lo[a], p[a]);
              hi[a] = std::max(hi[a], p[a] + 1);
            }
          }
    CHECK(bag.annotations[k].box == Box3D(lo[0], lo[1], lo[2], hi[0], hi[1], hi[2]));
  }
}

TEST_CASE("placement failure is reported when targets cannot fit") {
  BagSpec s = empty_bag(1);
  s.dims = Dims3{32, 32, 32};
  s.class_counts = {0, 0, 0, 0, 200};
  CHECK_THROWS_AS(generate_bag(s), PlacementError);
}

TEST_CASE("invalid bag specs are rejected") {
  BagSpec s;
  s.dims = Dims3{31, 48, 48};
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
  s = BagSpec{};
  s.noise_sigma = -0.1f;
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
  s = BagSpec{};
  s.class_counts = {0, -1, 0, 0, 0};
  CHECK_THROWS_AS(validate(s), std::invalid_argument);
}

TEST_CASE("glockframe sits closer to clutter intensity than handgun") {
  BagSpec s;
  const float gap_glock = target_intensity(3, s) - s.clutter_mean();
  const float gap_gun = target_intensity(1, s) - s.clutter_mean();
  CHECK(gap_glock < gap_gun);
  CHECK(std::abs(gap_glock) <= s.noise_sigma + 1e-6f);

  // measured on generated voxels, too
  BagSpec m = empty_bag(5);
  m.class_counts = {0, 2, 0, 2, 0};
  const Bag bag = generate_bag(m);
  const auto masks = target_masks(m);
  double sum[5] = {}, n[5] = {};
  for (std::size_t k = 0; k < masks.size(); ++k) {
    const int c = bag.annotations[k].class_id;
    for (std::size_t i = 0; i < masks[k].size(); ++i)
      if (masks[k][i]) {
        sum[c] += bag.volume.voxels()[i];
        n[c] += 1;
      }
  }
  REQUIRE(n[1] > 0);
  REQUIRE(n[3] > 0);
  CHECK(sum[3] / n[3] - m.clutter_mean() < sum[1] / n[1] - m.clutter_mean());
}

TEST_CASE("dual-energy channel is the base scaled by the material factor") {
  BagSpec s = empty_bag(9);
  s.channels = 2;
  s.class_counts = {1, 1, 1, 1, 1};
  const Bag bag = generate_bag(s);
  const auto masks = target_masks(s);
  for (std::size_t k = 0; k < masks.size(); ++k) {
    const float f = material_factor(bag.annotations[k].class_id);
    for (std::size_t i = 0; i < masks[k].size(); ++i)
      if (masks[k][i]) {
        const float lo = bag.volume.channel(0)[i];
        const float hi = bag.volume.channel(1)[i];
        CHECK(hi == doctest::Approx(std::clamp(lo * f, 0.0f, 1.0f)).epsilon(1e-5));
        break;
      }
  }
}

TEST_CASE("signature extraction") {
  Volume v(Dims3{10, 10, 10}, 1);
  for (int z = 2; z < 5; ++z)
    for (int y = 3; y < 6; ++y)
      for (int x = 4; x < 7; ++x) v.at(0, z, y, x) = 0.9f;
  const Box3D seed(0, 0, 0, 10, 10, 10);
  const Signature sig = extract_signature(v, seed, 0.5f, 1, "cube");
  CHECK(sig.dims() == Dims3{3, 3, 3});
  CHECK(sig.occupied() == 27);
  CHECK(sig.class_id == 1);
  CHECK_THROWS_AS(extract_signature(v, seed, 0.95f), EmptyMaskError);
}

TEST_CASE("extraction keeps the largest 6-connected component") {
  Volume v(Dims3{12, 12, 12}, 1);
  // 10-voxel bar and a 4-voxel bar, not 6-connected to each other (diagonal contact only)
  for (int x = 0; x < 10; ++x) v.at(0, 1, 1, x + 1) = 0.8f;
  for (int x = 0; x < 4; ++x) v.at(0, 2, 2, x + 2) = 0.7f;
  REQUIRE(largest_component(v, 0.5f) == 10);
  const Signature sig = extract_signature(v, Box3D(0, 0, 0, 12, 12, 12), 0.5f);
  CHECK(sig.occupied() == largest_component(v, 0.5f));
  CHECK(sig.dims() == Dims3{1, 1, 10});
  for (float x : sig.voxels.voxels()) CHECK(x == 0.8f);
}

TEST_CASE("signature invariants: zero outside the mask") {
  BagSpec s = empty_bag(4);
  s.class_counts = {1, 0, 0, 0, 0};
  const Bag bag = generate_bag(s);
  const Signature sig = extract_signature(bag.volume, bag.annotations[0].box, 0.05f);
  CHECK(sig.mask.size() == sig.dims().count());
  CHECK(sig.occupied() >= 1);
  for (std::size_t i = 0; i < sig.mask.size(); ++i)
    if (!sig.mask[i]) CHECK(sig.voxels.voxels()[i] == 0.0f);
}

TEST_CASE("projection into an empty target") {
  Volume sigv(Dims3{3, 4, 5}, 1);
  for (auto& x : sigv.voxels()) x = 0.6f;
  const Signature sig = extract_signature(sigv, Box3D(0, 0, 0, 3, 4, 5), 0.1f, 2);
  Volume target(Dims3{20, 20, 20}, 1);
  Rng rng = make_rng(1);
  const TipResult r = project_signature(target, sig, rng);
  CHECK(r.volume.meta.provenance == Provenance::TipComposited);
  CHECK(r.annotation.class_id == 2);
  const Box3D& b = r.annotation.box;
  CHECK(b.extent(0) == 3);
  CHECK(b.extent(1) == 4);
  CHECK(b.extent(2) == 5);
  for (int z = 0; z < 20; ++z)
    for (int y = 0; y < 20; ++y)
      for (int x = 0; x < 20; ++x) CHECK(r.volume.at(0, z, y, x) == (inside(b, z, y, x) ? 0.6f : 0.0f));
}

TEST_CASE("two projections differ from the target only inside their boxes") {
  Volume sigv(Dims3{4, 4, 4}, 1);
  for (auto& x : sigv.voxels()) x = 0.7f;
  const Signature sig = extract_signature(sigv, Box3D(0, 0, 0, 4, 4, 4), 0.1f);
  BagSpec s;
  s.class_counts = {0, 0, 0, 0, 0};
  s.seed = 12;
  const Volume target = generate_bag(s).volume;
  Rng rng = make_rng(2);
  const TipResult r1 = project_signature(target, sig, rng);
  const TipResult r2 = project_signature(r1.volume, sig, rng);
  const Dims3 d = target.dims();
  std::size_t outside_diff = 0;
  for (int z = 0; z < d.d; ++z)
    for (int y = 0; y < d.h; ++y)
      for (int x = 0; x < d.w; ++x) {
        const float a = target.at(0, z, y, x), b = r2.volume.at(0, z, y, x);
        CHECK(b >= a);
        if (a != b && !inside(r1.annotation.box, z, y, x) && !inside(r2.annotation.box, z, y, x)) ++outside_diff;
      }
  CHECK(outside_diff == 0);
}

TEST_CASE("projection preconditions") {
  Volume sigv(Dims3{8, 8, 8}, 1);
  for (auto& x : sigv.voxels()) x = 0.5f;
  const Signature sig = extract_signature(sigv, Box3D(0, 0, 0, 8, 8, 8), 0.1f);
  Rng rng = make_rng(0);
  CHECK_THROWS_AS(project_signature(Volume(Dims3{6, 20, 20}, 1), sig, rng), std::invalid_argument);
  Volume full(Dims3{10, 10, 10}, 1);
  for (auto& x : full.voxels()) x = 1.0f;
  CHECK_THROWS_AS(project_signature(full, sig, rng), PlacementError);
}

TEST_CASE("TIP never lowers intensity") {
  BagSpec s;
  s.channels = 2;
  s.class_counts = {0, 1, 0, 0, 0};
  s.seed = 31;
  const Bag donor = generate_bag(s);
  const Signature sig = extract_signature(donor.volume, donor.annotations[0].box, 0.2f, 1);
  BagSpec t;
  t.channels = 2;
  t.seed = 32;
  const Volume target = generate_bag(t).volume;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng = make_rng(seed);
    const TipResult r = project_signature(target, sig, rng);
    for (std::size_t i = 0; i < target.voxels().size(); ++i) CHECK(r.volume.voxels()[i] >= target.voxels()[i]);
  }
}

TEST_CASE("signature archive round-trips") {
  testutil::TempDir tmp("sig");
  BagSpec s = empty_bag(6);
  s.class_counts = {0, 0, 1, 0, 0};
  const Bag bag = generate_bag(s);
  const Signature sig = extract_signature(bag.volume, bag.annotations[0].box, 0.05f, 2, "src7");
  save_signature(sig, tmp.path(), "b1");
  const Signature back = load_signature(tmp.path(), "b1");
  CHECK(back.voxels == sig.voxels);
  CHECK(back.mask == sig.mask);
  CHECK(back.class_id == 2);
  CHECK(back.source_id == "src7");
  CHECK(list_signatures(tmp.path()) == std::vector<std::string>{"b1"});
}

TEST_CASE("dataset volumes are deterministic and TIP bags are tagged") {
  DatasetSpec ds;
  ds.base.seed = 9;
  ds.tip_fraction = 0.5;
  int tips = 0;
  for (int i = 0; i < 6; ++i) {
    const Bag a = make_dataset_volume(ds, i), b = make_dataset_volume(ds, i);
    CHECK(a.volume == b.volume);
    CHECK(a.annotations == b.annotations);
    CHECK(!a.annotations.empty());
    const bool tip = is_tip_volume(ds, i);
    tips += tip;
    CHECK((a.volume.meta.provenance == Provenance::TipComposited) == tip);
  }
  CHECK(tips > 0);
}
