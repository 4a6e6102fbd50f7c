// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <set>

#include "baggagedet/augment/augment.hpp"

using namespace baggagedet;
using namespace baggagedet::augment;

namespace {

Volume ramp(Dims3 d, int channels) {
  Volume v(d, channels);
  float k = 0;
  for (auto& x : v.voxels()) x = (k += 1.0f) / 1000.0f;
  return v;
}

std::vector<float> sorted(std::span<const float> xs) {
  std::vector<float> out(xs.begin(), xs.end());
  std::sort(out.begin(), out.end());
  return out;
}

// occupancy grid of a set of integer boxes
std::vector<int> rasterize(const std::vector<Box3D>& boxes, Dims3 d) {
  std::vector<int> g(d.count(), 0);
  for (std::size_t k = 0; k < boxes.size(); ++k)
    for (int z = 0; z < d.d; ++z)
      for (int y = 0; y < d.h; ++y)
        for (int x = 0; x < d.w; ++x) {
          const Box3D& b = boxes[k];
          if (b.lo[0] <= z && z < b.hi[0] && b.lo[1] <= y && y < b.hi[1] && b.lo[2] <= x && x < b.hi[2])
            g[(static_cast<std::size_t>(z) * d.h + y) * d.w + x] |= 1 << k;
        }
  return g;
}

}  // namespace

TEST_CASE("twelve distinct transforms") {
  const auto all = all_transforms();
  std::set<std::pair<int, int>> ids;
  std::set<std::string> names;
  for (const auto& t : all) {
    ids.insert({static_cast<int>(t.kind), t.index});
    names.insert(to_string(t));
  }
  CHECK(ids.size() == 12);
  CHECK(names.size() == 12);
  // distinct as coordinate maps too
  const Volume v = ramp(Dims3{3, 4, 5}, 1);
  std::set<std::vector<float>> outputs;
  for (const auto& t : all) {
    const auto r = apply_transform(v, {}, t);
    outputs.insert(std::vector<float>(r.volume.voxels().begin(), r.volume.voxels().end()));
  }
  CHECK(outputs.size() == 12);
}

TEST_CASE("z flip of a box in a 10^3 volume") {
  const Volume v(Dims3{10, 10, 10}, 1);
  const auto r = apply_transform(v, {Box3D(1, 2, 3, 4, 5, 6)}, TransformId{TransformKind::Flip, 0});
  // half-open extents: z in [1,4) maps to [10-4, 10-1)
  CHECK(r.boxes[0] == Box3D(6, 2, 3, 9, 5, 6));
}

TEST_CASE("flips are involutions and rotations pair with their inverse") {
  const Volume v = ramp(Dims3{4, 5, 6}, 2);
  const std::vector<Box3D> boxes{Box3D(0, 1, 2, 3, 4, 5), Box3D(1, 1, 1, 2, 5, 6)};
  for (const auto& t : all_transforms()) {
    const auto once = apply_transform(v, boxes, t);
    const auto back = apply_transform(once.volume, once.boxes, inverse(t));
    CHECK(back.volume == v);
    CHECK(back.boxes == boxes);
    if (t.kind == TransformKind::Flip) {
      CHECK(inverse(t) == t);
      const auto twice = apply_transform(once.volume, once.boxes, t);
      CHECK(twice.volume == v);
      CHECK(twice.boxes == boxes);
    } else {
      CHECK(!(inverse(t) == t));
    }
  }
}

TEST_CASE("every transform preserves the voxel multiset and is a bijection") {
  const Volume v = ramp(Dims3{3, 5, 7}, 2);
  for (const auto& t : all_transforms()) {
    const auto r = apply_transform(v, {}, t);
    CHECK(sorted(r.volume.voxels()) == sorted(v.voxels()));
    const AxisMap m = axis_map(t);
    const Dims3 od = transformed_dims(v.dims(), m);
    CHECK(od == r.volume.dims());
    std::set<std::array<int, 3>> hit;
    for (int z = 0; z < 3; ++z)
      for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 7; ++x) {
          const auto o = map_voxel({z, y, x}, v.dims(), m);
          CHECK(r.volume.at(1, o[0], o[1], o[2]) == v.at(1, z, y, x));
          hit.insert(o);
        }
    CHECK(hit.size() == v.dims().count());
  }
}

TEST_CASE("rasterize-then-transform equals transform-then-rasterize") {
  const Dims3 d{6, 7, 8};
  const std::vector<Box3D> boxes{Box3D(0, 1, 2, 3, 4, 5), Box3D(2, 0, 5, 6, 3, 8)};
  const auto grid = rasterize(boxes, d);
  Volume gv(d, 1);
  for (std::size_t i = 0; i < grid.size(); ++i) gv.voxels()[i] = static_cast<float>(grid[i]);
  for (const auto& t : all_transforms()) {
    const auto r = apply_transform(gv, boxes, t);
    const auto expect = rasterize(r.boxes, r.volume.dims());
    for (std::size_t i = 0; i < expect.size(); ++i) CHECK(static_cast<int>(r.volume.voxels()[i]) == expect[i]);
  }
}

TEST_CASE("rotations permute output dims for non-cubic volumes") {
  const Volume v = ramp(Dims3{2, 3, 4}, 1);
  const auto r = apply_transform(v, {}, TransformId{TransformKind::Rotation, 0});
  CHECK(r.volume.dims() == Dims3{2, 4, 3});
}

TEST_CASE("random_augment at p = 0 and p = 1") {
  const Volume v = ramp(Dims3{4, 4, 4}, 1);
  const std::vector<Box3D> boxes{Box3D(0, 0, 0, 2, 3, 4)};
  AugmentConfig cfg;
  cfg.p = 0.0;
  Rng rng = make_rng(1);
  const auto none = random_augment(v, boxes, cfg, rng);
  CHECK(none.applied.empty());
  CHECK(none.volume == v);
  CHECK(none.boxes == boxes);

  cfg.p = 1.0;
  Rng r1 = make_rng(1), r2 = make_rng(99);
  const auto a = random_augment(v, boxes, cfg, r1);
  const auto b = random_augment(v, boxes, cfg, r2);
  REQUIRE(a.applied.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) CHECK(a.applied[i] == all_transforms()[i]);
  CHECK(a.volume == b.volume);
  CHECK(a.boxes == b.boxes);
  // composition applied left to right
  Augmented manual{v, boxes};
  for (const auto& t : a.applied) manual = apply_transform(manual.volume, manual.boxes, t);
  CHECK(manual.volume == a.volume);
  CHECK(manual.boxes == a.boxes);
}

TEST_CASE("activation frequency at p = 0.2 over 10000 trials") {
  AugmentConfig cfg;
  cfg.p = 0.2;
  Rng rng = make_rng(2024);
  std::array<int, 12> hits{};
  const int trials = 10000;
  for (int i = 0; i < trials; ++i)
    for (const auto& t : sample_transforms(cfg, rng))
      ++hits[static_cast<std::size_t>(static_cast<int>(t.kind) * kTransformsPerKind + t.index)];
  for (int h : hits) {
    const double f = static_cast<double>(h) / trials;
    CHECK(f >= 0.18);
    CHECK(f <= 0.22);
  }
}

TEST_CASE("disabled kinds are never sampled") {
  AugmentConfig cfg;
  cfg.p = 1.0;
  cfg.enabled_flips = false;
  Rng rng = make_rng(0);
  for (const auto& t : sample_transforms(cfg, rng)) CHECK(t.kind == TransformKind::Rotation);
  cfg.enabled_flips = true;
  cfg.enabled_rotations = false;
  const auto only = sample_transforms(cfg, rng);
  CHECK(only.size() == 6);
  for (const auto& t : only) CHECK(t.kind == TransformKind::Flip);
}

TEST_CASE("per-sample streams are independent of loading order") {
  AugmentConfig cfg;
  cfg.seed = 5;
  Rng a = sample_rng(cfg, 3, 7), b = sample_rng(cfg, 3, 7), c = sample_rng(cfg, 3, 8);
  const auto ta = sample_transforms(cfg, a), tb = sample_transforms(cfg, b);
  CHECK(ta == tb);
  CHECK(a() == b());
  CHECK(a() != c());
}

TEST_CASE("invalid probability is rejected") {
  AugmentConfig cfg;
  cfg.p = 1.5;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg.p = -0.1;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}
