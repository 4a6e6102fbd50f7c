// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/synthtip/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <numeric>

#include <json.hpp>

#include "baggagedet/volcore/bvox.hpp"

namespace baggagedet::synth {

namespace {

/// A solid rasterized in its own local grid. Intensity is 0 wherever mask is 0.
struct Stamp {
  Dims3 dims;
  std::vector<float> intensity;
  std::vector<std::uint8_t> mask;
  float material = 1.0f;

  Stamp(Dims3 d, float mat) : dims(d), intensity(d.count(), 0.0f), mask(d.count(), 0), material(mat) {}
  std::size_t idx(int z, int y, int x) const {
    return (static_cast<std::size_t>(z) * dims.h + y) * dims.w + x;
  }
  void set(int z, int y, int x, float v) {
    intensity[idx(z, y, x)] = v;
    mask[idx(z, y, x)] = 1;
  }
};

/// Axis permutation plus per-axis reversal: output axis a reads source axis perm[a].
struct Orientation {
  std::array<int, 3> perm{0, 1, 2};
  std::array<bool, 3> flip{false, false, false};
};

Orientation random_orientation(Rng& rng) {
  static constexpr std::array<std::array<int, 3>, 6> kPerms = {
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  Orientation o;
  o.perm = kPerms[uniform_int(rng, 0, 5)];
  for (auto& f : o.flip) f = uniform_int(rng, 0, 1) == 1;
  return o;
}

Stamp orient(const Stamp& s, const Orientation& o) {
  Dims3 out{s.dims[o.perm[0]], s.dims[o.perm[1]], s.dims[o.perm[2]]};
  Stamp r(out, s.material);
  std::array<int, 3> src{};
  for (int z = 0; z < out.d; ++z)
    for (int y = 0; y < out.h; ++y)
      for (int x = 0; x < out.w; ++x) {
        const std::array<int, 3> dst{z, y, x};
        for (int a = 0; a < 3; ++a) {
          const int len = out[a];
          src[o.perm[a]] = o.flip[a] ? len - 1 - dst[a] : dst[a];
        }
        const auto si = s.idx(src[0], src[1], src[2]);
        if (s.mask[si]) r.set(z, y, x, s.intensity[si]);
      }
  return r;
}

// --- target solids, canonical frame -------------------------------------------------------

Stamp make_bottle(Rng& rng, float intensity) {
  const int radius = uniform_int(rng, 4, 6);
  const int length = uniform_int(rng, 12, 18);
  const int neck_len = 4;
  const double neck_r = std::max(1.5, radius * 0.5);
  const int side = 2 * radius + 1;
  Stamp s({length, side, side}, material_factor(0));
  for (int z = 0; z < length; ++z)
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) {
        const double r = std::hypot(y - radius, x - radius);
        bool on = false;
        if (z < length - neck_len) {
          on = r <= radius + 0.3 && (r > radius - 1.5 || z < 2);
        } else {
          on = r <= neck_r + 0.3 && r > neck_r - 1.2;
        }
        if (on) s.set(z, y, x, intensity);
      }
  return s;
}

Stamp make_handgun(Rng& rng, float intensity) {
  const int thick = uniform_int(rng, 3, 4);
  const int barrel_len = uniform_int(rng, 14, 18);
  const int barrel_h = 4;
  const int grip_len = uniform_int(rng, 7, 9);
  const int grip_w = uniform_int(rng, 4, 5);
  Stamp s({thick, barrel_h + grip_len, barrel_len}, material_factor(1));
  for (int z = 0; z < thick; ++z)
    for (int y = 0; y < barrel_h + grip_len; ++y)
      for (int x = 0; x < barrel_len; ++x) {
        if (y < barrel_h || x < grip_w) s.set(z, y, x, intensity);
      }
  return s;
}

Stamp make_binocular(Rng& rng, float intensity) {
  const int radius = uniform_int(rng, 3, 4);
  const int length = uniform_int(rng, 10, 13);
  const int gap = uniform_int(rng, 1, 2);
  const int side = 2 * radius + 1;
  Stamp s({length, side, 2 * side + gap}, material_factor(2));
  const double cx0 = radius;
  const double cx1 = side + gap + radius;
  for (int z = 0; z < length; ++z)
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < 2 * side + gap; ++x) {
        const double r0 = std::hypot(y - radius, x - cx0);
        const double r1 = std::hypot(y - radius, x - cx1);
        const bool barrel = r0 <= radius + 0.3 || r1 <= radius + 0.3;
        const bool bridge = std::abs(z - length / 2) <= 2 && std::abs(y - radius) <= 1 && x > cx0 && x < cx1;
        if (barrel || bridge) s.set(z, y, x, intensity);
      }
  return s;
}

Stamp make_glockframe(Rng& rng, float intensity) {
  const int thick = 3;
  const int rail_len = uniform_int(rng, 13, 16);
  const int rail_h = 3;
  const int grip_len = uniform_int(rng, 8, 10);
  const int grip_w = 5;
  const int h = rail_h + grip_len;
  Stamp s({thick, h, rail_len}, material_factor(3));
  for (int z = 0; z < thick; ++z)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < rail_len; ++x) {
        const bool rail = y < rail_h;
        const bool grip_ring = x < grip_w && (x == 0 || x == grip_w - 1 || y == h - 1);
        if (rail || grip_ring) s.set(z, y, x, intensity);
      }
  return s;
}

Stamp make_ipod(Rng& rng, float intensity) {
  const int h = uniform_int(rng, 10, 12);
  const int w = uniform_int(rng, 6, 8);
  Stamp s({2, h, w}, material_factor(4));
  for (int z = 0; z < 2; ++z)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) s.set(z, y, x, intensity);
  return s;
}

Stamp make_target(int class_id, Rng& rng, float intensity) {
  switch (class_id) {
    case 0: return make_bottle(rng, intensity);
    case 1: return make_handgun(rng, intensity);
    case 2: return make_binocular(rng, intensity);
    case 3: return make_glockframe(rng, intensity);
    case 4: return make_ipod(rng, intensity);
    default: throw std::invalid_argument("unknown target class " + std::to_string(class_id));
  }
}

// --- clutter --------------------------------------------------------------------------------

Stamp make_clutter(Rng& rng, float intensity) {
  const float mat = static_cast<float>(uniform(rng, 0.85, 1.15));
  switch (uniform_int(rng, 0, 2)) {
    case 0: {  // ellipsoid
      const std::array<int, 3> r{uniform_int(rng, 2, 8), uniform_int(rng, 2, 8), uniform_int(rng, 2, 8)};
      Stamp s({2 * r[0] + 1, 2 * r[1] + 1, 2 * r[2] + 1}, mat);
      for (int z = 0; z < s.dims.d; ++z)
        for (int y = 0; y < s.dims.h; ++y)
          for (int x = 0; x < s.dims.w; ++x) {
            const double q = std::pow((z - r[0]) / (r[0] + 0.5), 2) + std::pow((y - r[1]) / (r[1] + 0.5), 2) +
                             std::pow((x - r[2]) / (r[2] + 0.5), 2);
            if (q <= 1.0) s.set(z, y, x, intensity);
          }
      return s;
    }
    case 1: {  // cuboid
      Stamp s({uniform_int(rng, 3, 14), uniform_int(rng, 3, 14), uniform_int(rng, 3, 14)}, mat);
      std::fill(s.intensity.begin(), s.intensity.end(), intensity);
      std::fill(s.mask.begin(), s.mask.end(), 1);
      return s;
    }
    default: {  // tube
      const int radius = uniform_int(rng, 2, 5);
      const int length = uniform_int(rng, 8, 24);
      const double wall = uniform(rng, 1.0, 2.0);
      const int side = 2 * radius + 1;
      Stamp s({length, side, side}, mat);
      for (int z = 0; z < length; ++z)
        for (int y = 0; y < side; ++y)
          for (int x = 0; x < side; ++x) {
            const double r = std::hypot(y - radius, x - radius);
            if (r <= radius + 0.3 && r > radius - wall) s.set(z, y, x, intensity);
          }
      return orient(s, random_orientation(rng));
    }
  }
}

struct Canvas {
  Dims3 dims;
  std::vector<float> base;
  std::vector<float> material;
  std::vector<std::uint8_t> target;  // instance index + 1, 0 = none

  explicit Canvas(Dims3 d) : dims(d), base(d.count(), 0.0f), material(d.count(), 1.0f), target(d.count(), 0) {}
  std::size_t idx(int z, int y, int x) const { return (static_cast<std::size_t>(z) * dims.h + y) * dims.w + x; }
};

bool fits_free(const Canvas& c, const Stamp& s, const std::array<int, 3>& off) {
  for (int z = 0; z < s.dims.d; ++z)
    for (int y = 0; y < s.dims.h; ++y)
      for (int x = 0; x < s.dims.w; ++x) {
        if (s.mask[s.idx(z, y, x)] && c.target[c.idx(off[0] + z, off[1] + y, off[2] + x)]) return false;
      }
  return true;
}

struct PlacedTarget {
  Stamp stamp;
  std::array<int, 3> offset;
  int class_id;
};

std::vector<PlacedTarget> place_targets(const BagSpec& spec, Canvas& canvas) {
  Rng rng = make_rng(spec.seed, {0x7a12});
  std::vector<int> order;
  for (int c = 0; c < static_cast<int>(spec.class_counts.size()); ++c)
    for (int k = 0; k < spec.class_counts[c]; ++k) order.push_back(c);

  std::vector<PlacedTarget> placed;
  for (int class_id : order) {
    // glockframe jitter stays inside one noise sigma of the clutter mean
    const double jitter = class_id == 3 ? 0.5 * spec.noise_sigma : 0.03;
    const float intensity = target_intensity(class_id, spec) + static_cast<float>(uniform(rng, -jitter, jitter));
    const Stamp canonical = make_target(class_id, rng, std::clamp(intensity, 0.05f, 1.0f));
    bool ok = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !ok; ++attempt) {
      Stamp s = orient(canonical, random_orientation(rng));
      std::array<int, 3> off{};
      bool inside = true;
      for (int a = 0; a < 3; ++a) {
        const int room = spec.dims[a] - s.dims[a] - 2;
        if (room < 0) {
          inside = false;
          break;
        }
        off[a] = 1 + uniform_int(rng, 0, room);
      }
      if (!inside || !fits_free(canvas, s, off)) continue;
      const auto id = static_cast<std::uint8_t>(placed.size() + 1);
      for (int z = 0; z < s.dims.d; ++z)
        for (int y = 0; y < s.dims.h; ++y)
          for (int x = 0; x < s.dims.w; ++x) {
            if (s.mask[s.idx(z, y, x)]) canvas.target[canvas.idx(off[0] + z, off[1] + y, off[2] + x)] = id;
          }
      placed.push_back({std::move(s), off, class_id});
      ok = true;
    }
    if (!ok) {
      throw PlacementError("could not place a " + class_name(class_id) + " collision-free after " +
                           std::to_string(kMaxPlacementAttempts) + " attempts");
    }
  }
  return placed;
}

Bag render(const BagSpec& spec, std::vector<std::vector<std::uint8_t>>* masks_out) {
  validate(spec);
  Canvas canvas(spec.dims);
  auto targets = place_targets(spec, canvas);

  // benign clutter; may overlap other clutter (max blend) but never target voxels
  Rng clutter_rng = make_rng(spec.seed, {0xc1u});
  const int n_clutter = spec.clutter_max > 0 ? uniform_int(clutter_rng, spec.clutter_min, spec.clutter_max) : 0;
  for (int i = 0; i < n_clutter; ++i) {
    const float inten =
        static_cast<float>(uniform(clutter_rng, spec.clutter_intensity_lo, spec.clutter_intensity_hi));
    const Stamp s = make_clutter(clutter_rng, inten);
    std::array<int, 3> off{};
    for (int a = 0; a < 3; ++a) off[a] = uniform_int(clutter_rng, -s.dims[a] / 2, spec.dims[a] - 1 - s.dims[a] / 2);
    for (int z = 0; z < s.dims.d; ++z)
      for (int y = 0; y < s.dims.h; ++y)
        for (int x = 0; x < s.dims.w; ++x) {
          const int gz = off[0] + z, gy = off[1] + y, gx = off[2] + x;
          if (gz < 0 || gy < 0 || gx < 0 || gz >= spec.dims.d || gy >= spec.dims.h || gx >= spec.dims.w) continue;
          const auto si = s.idx(z, y, x);
          const auto gi = canvas.idx(gz, gy, gx);
          if (!s.mask[si] || canvas.target[gi]) continue;
          if (s.intensity[si] > canvas.base[gi]) {
            canvas.base[gi] = s.intensity[si];
            canvas.material[gi] = s.material;
          }
        }
  }

  std::vector<Annotation> anns;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const auto& p = targets[t];
    std::array<int, 3> lo{p.stamp.dims.d, p.stamp.dims.h, p.stamp.dims.w};
    std::array<int, 3> hi{0, 0, 0};
    for (int z = 0; z < p.stamp.dims.d; ++z)
      for (int y = 0; y < p.stamp.dims.h; ++y)
        for (int x = 0; x < p.stamp.dims.w; ++x) {
          const auto si = p.stamp.idx(z, y, x);
          if (!p.stamp.mask[si]) continue;
          const auto gi = canvas.idx(p.offset[0] + z, p.offset[1] + y, p.offset[2] + x);
          canvas.base[gi] = p.stamp.intensity[si];
          canvas.material[gi] = p.stamp.material;
          const std::array<int, 3> v{z, y, x};
          for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], v[a]);
            hi[a] = std::max(hi[a], v[a] + 1);
          }
        }
    Annotation a;
    a.class_id = p.class_id;
    a.instance_id = static_cast<int>(t);
    a.box = Box3D(p.offset[0] + lo[0], p.offset[1] + lo[1], p.offset[2] + lo[2], p.offset[0] + hi[0],
                  p.offset[1] + hi[1], p.offset[2] + hi[2]);
    anns.push_back(a);
  }

  if (masks_out != nullptr) {
    masks_out->clear();
    for (std::size_t t = 0; t < targets.size(); ++t) {
      std::vector<std::uint8_t> m(canvas.target.size());
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = canvas.target[i] == t + 1 ? 1 : 0;
      masks_out->push_back(std::move(m));
    }
  }

  VolumeMeta meta;
  meta.source_id = "bag-" + std::to_string(spec.seed);
  meta.provenance = Provenance::RealSynthetic;
  meta.energy = spec.channels == 2 ? EnergyTag::Dual : EnergyTag::Low;
  Volume v(spec.dims, spec.channels, meta);
  Rng noise_rng = make_rng(spec.seed, {0x901e});
  auto ch0 = v.channel(0);
  for (std::size_t i = 0; i < ch0.size(); ++i) {
    float val = canvas.base[i];
    if (spec.noise_sigma > 0.0f) val += spec.noise_sigma * static_cast<float>(normal01(noise_rng));
    ch0[i] = std::clamp(val, 0.0f, 1.0f);
  }
  if (spec.channels == 2) {
    auto ch1 = v.channel(1);
    for (std::size_t i = 0; i < ch1.size(); ++i) ch1[i] = std::clamp(ch0[i] * canvas.material[i], 0.0f, 1.0f);
  }
  return {std::move(v), std::move(anns)};
}

}  // namespace

void validate(const BagSpec& spec) {
  if (spec.dims.d < 32 || spec.dims.h < 32 || spec.dims.w < 32) {
    throw std::invalid_argument("bag dims must be >= 32 on every axis");
  }
  if (spec.channels != 1 && spec.channels != 2) throw std::invalid_argument("bag channels must be 1 or 2");
  if (spec.noise_sigma < 0.0f) throw std::invalid_argument("noise sigma must be >= 0");
  if (spec.clutter_min < 0 || spec.clutter_max < spec.clutter_min) {
    throw std::invalid_argument("clutter count range must satisfy 0 <= min <= max");
  }
  if (spec.clutter_intensity_lo < 0.0f || spec.clutter_intensity_hi > 1.0f ||
      spec.clutter_intensity_hi < spec.clutter_intensity_lo) {
    throw std::invalid_argument("clutter intensity range must lie in [0,1] with lo <= hi");
  }
  if (static_cast<int>(spec.class_counts.size()) > kDefaultNumClasses) {
    throw std::invalid_argument("at most 5 target classes are defined");
  }
  for (int c : spec.class_counts) {
    if (c < 0) throw std::invalid_argument("per-class instance counts must be >= 0");
  }
}

float target_intensity(int class_id, const BagSpec& spec) {
  switch (class_id) {
    case 0: return 0.72f;
    case 1: return 0.92f;
    case 2: return 0.78f;
    // plastic frame: sits at the clutter mean, offset by less than one noise sigma
    case 3: return spec.clutter_mean() + 0.5f * spec.noise_sigma;
    case 4: return 0.62f;
    default: throw std::invalid_argument("unknown target class " + std::to_string(class_id));
  }
}

float material_factor(int class_id) {
  static constexpr std::array<float, kDefaultNumClasses> kFactors = {0.95f, 1.08f, 1.0f, 0.92f, 1.05f};
  if (class_id < 0 || class_id >= kDefaultNumClasses) return 1.0f;
  return kFactors[class_id];
}

Bag generate_bag(const BagSpec& spec) { return render(spec, nullptr); }

std::vector<std::vector<std::uint8_t>> target_masks(const BagSpec& spec) {
  std::vector<std::vector<std::uint8_t>> masks;
  render(spec, &masks);
  return masks;
}

std::size_t Signature::occupied() const { return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1)); }

Signature extract_signature(const Volume& v, const Box3D& seed_box, float threshold, int class_id,
                            std::string source_id) {
  const Dims3 dims = v.dims();
  std::array<int, 3> lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::clamp(static_cast<int>(std::floor(seed_box.lo[a])), 0, dims[a]);
    hi[a] = std::clamp(static_cast<int>(std::ceil(seed_box.hi[a])), 0, dims[a]);
    if (hi[a] <= lo[a]) throw std::invalid_argument("seed box lies outside the volume");
  }
  const Dims3 roi{hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]};
  auto ridx = [&](int z, int y, int x) { return (static_cast<std::size_t>(z) * roi.h + y) * roi.w + x; };
  const auto ch0 = v.channel(0);
  std::vector<int> label(roi.count(), 0);
  std::vector<std::uint8_t> above(roi.count(), 0);
  for (int z = 0; z < roi.d; ++z)
    for (int y = 0; y < roi.h; ++y)
      for (int x = 0; x < roi.w; ++x)
        above[ridx(z, y, x)] = ch0[v.index(lo[0] + z, lo[1] + y, lo[2] + x)] > threshold ? 1 : 0;

  int best_label = 0;
  std::size_t best_size = 0;
  int next = 0;
  std::deque<std::array<int, 3>> queue;
  static constexpr std::array<std::array<int, 3>, 6> kNbr = {
      {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};
  for (int z = 0; z < roi.d; ++z)
    for (int y = 0; y < roi.h; ++y)
      for (int x = 0; x < roi.w; ++x) {
        if (!above[ridx(z, y, x)] || label[ridx(z, y, x)]) continue;
        ++next;
        std::size_t size = 0;
        label[ridx(z, y, x)] = next;
        queue.push_back({z, y, x});
        while (!queue.empty()) {
          const auto p = queue.front();
          queue.pop_front();
          ++size;
          for (const auto& n : kNbr) {
            const int qz = p[0] + n[0], qy = p[1] + n[1], qx = p[2] + n[2];
            if (qz < 0 || qy < 0 || qx < 0 || qz >= roi.d || qy >= roi.h || qx >= roi.w) continue;
            const auto qi = ridx(qz, qy, qx);
            if (above[qi] && !label[qi]) {
              label[qi] = next;
              queue.push_back({qz, qy, qx});
            }
          }
        }
        if (size > best_size) {
          best_size = size;
          best_label = next;
        }
      }
  if (best_size == 0) throw EmptyMaskError("no voxel in the seed box exceeds the extraction threshold");

  std::array<int, 3> mlo{roi.d, roi.h, roi.w}, mhi{0, 0, 0};
  for (int z = 0; z < roi.d; ++z)
    for (int y = 0; y < roi.h; ++y)
      for (int x = 0; x < roi.w; ++x) {
        if (label[ridx(z, y, x)] != best_label) continue;
        const std::array<int, 3> p{z, y, x};
        for (int a = 0; a < 3; ++a) {
          mlo[a] = std::min(mlo[a], p[a]);
          mhi[a] = std::max(mhi[a], p[a] + 1);
        }
      }
  const Dims3 sd{mhi[0] - mlo[0], mhi[1] - mlo[1], mhi[2] - mlo[2]};
  VolumeMeta meta = v.meta;
  meta.source_id = source_id.empty() ? v.meta.source_id : source_id;
  Signature sig{Volume(sd, v.channels(), meta), std::vector<std::uint8_t>(sd.count(), 0), class_id, meta.source_id};
  for (int z = 0; z < sd.d; ++z)
    for (int y = 0; y < sd.h; ++y)
      for (int x = 0; x < sd.w; ++x) {
        const int rz = mlo[0] + z, ry = mlo[1] + y, rx = mlo[2] + x;
        if (label[ridx(rz, ry, rx)] != best_label) continue;
        const auto si = sig.voxels.index(z, y, x);
        sig.mask[si] = 1;
        for (int c = 0; c < v.channels(); ++c) sig.voxels.at(c, z, y, x) = v.at(c, lo[0] + rz, lo[1] + ry, lo[2] + rx);
      }
  return sig;
}

TipResult project_signature(const Volume& target, const Signature& sig, Rng& rng, const TipOptions& opts) {
  const Dims3 td = target.dims();
  const Dims3 sd = sig.dims();
  for (int a = 0; a < 3; ++a) {
    if (sd[a] > td[a]) throw std::invalid_argument("signature does not fit inside the target volume");
  }
  if (sig.voxels.channels() != target.channels()) {
    throw std::invalid_argument("signature and target channel counts differ");
  }
  const std::size_t occupied = sig.occupied();
  if (occupied == 0) throw std::invalid_argument("signature mask is empty");
  const auto tch0 = target.channel(0);

  for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
    const std::array<int, 3> off{uniform_int(rng, 0, td.d - sd.d), uniform_int(rng, 0, td.h - sd.h),
                                 uniform_int(rng, 0, td.w - sd.w)};
    std::size_t collisions = 0;
    for (int z = 0; z < sd.d; ++z)
      for (int y = 0; y < sd.h; ++y)
        for (int x = 0; x < sd.w; ++x) {
          if (sig.mask[sig.voxels.index(z, y, x)] &&
              tch0[target.index(off[0] + z, off[1] + y, off[2] + x)] > opts.occupancy_threshold) {
            ++collisions;
          }
        }
    if (static_cast<double>(collisions) > opts.max_collision_fraction * static_cast<double>(occupied)) continue;

    TipResult result{target, {}, off};
    result.volume.meta.provenance = Provenance::TipComposited;
    for (int c = 0; c < target.channels(); ++c)
      for (int z = 0; z < sd.d; ++z)
        for (int y = 0; y < sd.h; ++y)
          for (int x = 0; x < sd.w; ++x) {
            if (!sig.mask[sig.voxels.index(z, y, x)]) continue;
            float& dst = result.volume.at(c, off[0] + z, off[1] + y, off[2] + x);
            dst = std::max(dst, sig.voxels.at(c, z, y, x));
          }
    result.annotation.class_id = sig.class_id;
    result.annotation.box = Box3D(off[0], off[1], off[2], off[0] + sd.d, off[1] + sd.h, off[2] + sd.w);
    return result;
  }
  throw PlacementError("no TIP placement within the collision tolerance after " + std::to_string(opts.max_attempts) +
                       " attempts");
}

void save_signature(const Signature& sig, const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  write_file_bytes(dir / (name + ".bvox"), encode_bvox(sig.voxels));
  std::vector<float> m(sig.mask.begin(), sig.mask.end());
  write_file_bytes(dir / (name + ".mask.bvox"), encode_bvox(Volume(sig.dims(), 1, std::move(m))));
  nlohmann::json meta = {{"class_id", sig.class_id},
                         {"class_name", class_name(sig.class_id)},
                         {"source_id", sig.source_id},
                         {"occupied", sig.occupied()}};
  write_text_file(dir / (name + ".json"), meta.dump(2) + "\n");
}

Signature load_signature(const std::filesystem::path& dir, const std::string& name) {
  Signature sig;
  sig.voxels = decode_bvox(read_file_bytes(dir / (name + ".bvox")));
  const Volume m = decode_bvox(read_file_bytes(dir / (name + ".mask.bvox")));
  if (!(m.dims() == sig.voxels.dims())) throw std::invalid_argument("signature mask dims differ from voxels");
  sig.mask.resize(m.channel_size());
  for (std::size_t i = 0; i < sig.mask.size(); ++i) sig.mask[i] = m.voxels()[i] > 0.5f ? 1 : 0;
  const auto meta = nlohmann::json::parse(read_text_file(dir / (name + ".json")));
  sig.class_id = meta.at("class_id").get<int>();
  sig.source_id = meta.value("source_id", std::string());
  sig.voxels.meta.source_id = sig.source_id;
  return sig;
}

std::vector<std::string> list_signatures(const std::filesystem::path& dir) {
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto p = entry.path();
    if (p.extension() == ".json") names.push_back(p.stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace baggagedet::synth
