// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/augment/augment.hpp"

#include <stdexcept>

namespace baggagedet::augment {

std::array<TransformId, 12> all_transforms() {
  std::array<TransformId, 12> out{};
  for (int i = 0; i < kTransformsPerKind; ++i) {
    out[i] = {TransformKind::Flip, i};
    out[kTransformsPerKind + i] = {TransformKind::Rotation, i};
  }
  return out;
}

std::string to_string(const TransformId& t) {
  static constexpr const char* kFlips[] = {"flip_z", "flip_y", "flip_x", "flip_zy", "flip_zx", "flip_yx"};
  static constexpr const char* kRots[] = {"rot_z+90", "rot_z-90", "rot_y+90", "rot_y-90", "rot_x+90", "rot_x-90"};
  return t.kind == TransformKind::Flip ? kFlips[t.index] : kRots[t.index];
}

TransformId inverse(const TransformId& t) {
  if (t.kind == TransformKind::Flip) return t;
  return {TransformKind::Rotation, t.index ^ 1};
}

AxisMap axis_map(const TransformId& t) {
  if (t.index < 0 || t.index >= kTransformsPerKind) throw std::invalid_argument("transform index must be 0..5");
  AxisMap m;
  if (t.kind == TransformKind::Flip) {
    static constexpr std::array<std::array<bool, 3>, 6> kFlips = {{{true, false, false},
                                                                  {false, true, false},
                                                                  {false, false, true},
                                                                  {true, true, false},
                                                                  {true, false, true},
                                                                  {false, true, true}}};
    m.flip = kFlips[t.index];
    return m;
  }
  // rotation about `axis` acts in the plane of the other two axes (a, b): swap them, then
  // reverse the second (+90) or the first (-90)
  const int axis = t.index / 2;
  const bool positive = t.index % 2 == 0;
  const int a = axis == 0 ? 1 : 0;
  const int b = axis == 2 ? 1 : 2;
  m.perm[a] = b;
  m.perm[b] = a;
  if (positive) {
    m.flip[b] = true;
  } else {
    m.flip[a] = true;
  }
  return m;
}

Dims3 transformed_dims(const Dims3& in, const AxisMap& m) { return {in[m.perm[0]], in[m.perm[1]], in[m.perm[2]]}; }

std::array<int, 3> map_voxel(const std::array<int, 3>& v, const Dims3& in, const AxisMap& m) {
  std::array<int, 3> out{};
  for (int a = 0; a < 3; ++a) {
    const int src = m.perm[a];
    out[a] = m.flip[a] ? in[src] - 1 - v[src] : v[src];
  }
  return out;
}

Box3D map_box(const Box3D& b, const Dims3& in, const AxisMap& m) {
  Box3D out;
  for (int a = 0; a < 3; ++a) {
    const int src = m.perm[a];
    if (m.flip[a]) {
      out.lo[a] = in[src] - b.hi[src];
      out.hi[a] = in[src] - b.lo[src];
    } else {
      out.lo[a] = b.lo[src];
      out.hi[a] = b.hi[src];
    }
  }
  return out;
}

Augmented apply_transform(const Volume& v, const std::vector<Box3D>& boxes, const TransformId& t) {
  const AxisMap m = axis_map(t);
  const Dims3 in = v.dims();
  const Dims3 out = transformed_dims(in, m);
  Volume result(out, v.channels(), v.meta);
  // strides of the input index along each output axis, so the inner loop is a strided copy
  const std::array<std::ptrdiff_t, 3> in_stride{static_cast<std::ptrdiff_t>(in.h) * in.w, in.w, 1};
  std::array<std::ptrdiff_t, 3> step{};
  std::array<std::ptrdiff_t, 3> start{};
  for (int a = 0; a < 3; ++a) {
    const int src = m.perm[a];
    step[a] = m.flip[a] ? -in_stride[src] : in_stride[src];
    start[a] = m.flip[a] ? (in[src] - 1) * in_stride[src] : 0;
  }
  const std::ptrdiff_t base = start[0] + start[1] + start[2];
  for (int c = 0; c < v.channels(); ++c) {
    const float* src = v.channel(c).data();
    float* dst = result.channel(c).data();
#pragma omp parallel for schedule(static)
    for (int z = 0; z < out.d; ++z) {
      for (int y = 0; y < out.h; ++y) {
        std::ptrdiff_t s = base + z * step[0] + y * step[1];
        float* row = dst + (static_cast<std::size_t>(z) * out.h + y) * out.w;
        for (int x = 0; x < out.w; ++x, s += step[2]) row[x] = src[s];
      }
    }
  }
  Augmented aug{std::move(result), {}};
  aug.boxes.reserve(boxes.size());
  for (const auto& b : boxes) aug.boxes.push_back(map_box(b, in, m));
  return aug;
}

void validate(const AugmentConfig& cfg) {
  if (!(cfg.p >= 0.0 && cfg.p <= 1.0)) throw std::invalid_argument("aug.p must lie in [0,1]");
}

std::vector<TransformId> sample_transforms(const AugmentConfig& cfg, Rng& rng) {
  validate(cfg);
  std::vector<TransformId> applied;
  for (const auto& t : all_transforms()) {
    const bool enabled = t.kind == TransformKind::Flip ? cfg.enabled_flips : cfg.enabled_rotations;
    if (!enabled) continue;
    if (uniform01(rng) < cfg.p) applied.push_back(t);
  }
  return applied;
}

RandomAugmentResult random_augment(const Volume& v, const std::vector<Box3D>& boxes, const AugmentConfig& cfg,
                                   Rng& rng) {
  RandomAugmentResult r{v, boxes, sample_transforms(cfg, rng)};
  for (const auto& t : r.applied) {
    auto next = apply_transform(r.volume, r.boxes, t);
    r.volume = std::move(next.volume);
    r.boxes = std::move(next.boxes);
  }
  return r;
}

Rng sample_rng(const AugmentConfig& cfg, int epoch, int sample_index) {
  return make_rng(cfg.seed, {0xa06, static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(sample_index)});
}

}  // namespace baggagedet::augment
