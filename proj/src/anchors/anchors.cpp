// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/anchors/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace baggagedet::anchors {

void validate(const AnchorConfig& cfg) {
  if (cfg.levels.empty()) throw std::invalid_argument("anchors.levels must not be empty");
  for (std::size_t i = 0; i < cfg.levels.size(); ++i) {
    if (cfg.levels[i] < 0 || cfg.levels[i] >= kNumPyramidLevels)
      throw std::invalid_argument("anchors.levels entries must be 0..3");
    if (i > 0 && cfg.levels[i] <= cfg.levels[i - 1]) throw std::invalid_argument("anchors.levels must be ascending");
  }
  if (cfg.base_sizes.size() != cfg.levels.size())
    throw std::invalid_argument("anchors.sizes needs one size per pyramid level (" +
                                std::to_string(cfg.levels.size()) + ")");
  for (std::size_t i = 0; i < cfg.base_sizes.size(); ++i) {
    if (!(cfg.base_sizes[i] > 0) || !std::isfinite(cfg.base_sizes[i]))
      throw std::invalid_argument("anchors.sizes must be positive");
    if (i > 0 && cfg.base_sizes[i] <= cfg.base_sizes[i - 1])
      throw std::invalid_argument("anchors.sizes must be ascending with level");
  }
  if (cfg.scale_multipliers.empty()) throw std::invalid_argument("anchors.multipliers must not be empty");
  for (double m : cfg.scale_multipliers)
    if (!(m > 0) || !std::isfinite(m)) throw std::invalid_argument("anchors.multipliers must be positive");
}

std::size_t LevelGrid::count() const { return grid.count() * static_cast<std::size_t>(n_a); }

std::size_t AnchorSet::linear_id(const AnchorIndex& idx) const {
  const LevelGrid& g = levels.at(static_cast<std::size_t>(idx.level_slot));
  const std::size_t cell = (static_cast<std::size_t>(idx.z) * g.grid.h + idx.y) * g.grid.w + idx.x;
  return g.offset + cell * n_a + idx.a;
}

AnchorIndex AnchorSet::unflatten(std::size_t id) const {
  if (id >= size()) throw std::out_of_range("anchor id out of range");
  int slot = static_cast<int>(levels.size()) - 1;
  while (slot > 0 && levels[slot].offset > id) --slot;
  const LevelGrid& g = levels[slot];
  std::size_t rel = id - g.offset;
  AnchorIndex idx;
  idx.level_slot = slot;
  idx.a = static_cast<int>(rel % n_a);
  rel /= n_a;
  idx.x = static_cast<int>(rel % g.grid.w);
  rel /= g.grid.w;
  idx.y = static_cast<int>(rel % g.grid.h);
  idx.z = static_cast<int>(rel / g.grid.h);
  return idx;
}

AnchorSet build_anchor_grid(const Dims3& input_dims, const AnchorConfig& cfg) {
  validate(cfg);
  for (int a = 0; a < 3; ++a)
    if (input_dims[a] <= 0 || input_dims[a] % 32 != 0)
      throw std::invalid_argument("anchor grid input dims must be positive multiples of 32");
  AnchorSet set;
  set.input_dims = input_dims;
  set.n_a = cfg.num_anchors_per_location();
  set.multipliers = cfg.scale_multipliers;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < cfg.levels.size(); ++i) {
    LevelGrid g;
    g.level = cfg.levels[i];
    g.stride = kLevelStrides[static_cast<std::size_t>(g.level)];
    g.base_size = cfg.base_sizes[i];
    g.grid = {input_dims.d / g.stride, input_dims.h / g.stride, input_dims.w / g.stride};
    g.n_a = set.n_a;
    g.offset = offset;
    offset += g.count();
    set.levels.push_back(g);
  }
  set.boxes.reserve(offset);
  for (const auto& g : set.levels) {
    const double half_stride = 0.5 * g.stride;
    for (int z = 0; z < g.grid.d; ++z)
      for (int y = 0; y < g.grid.h; ++y)
        for (int x = 0; x < g.grid.w; ++x) {
          const double cz = half_stride + g.stride * z;
          const double cy = half_stride + g.stride * y;
          const double cx = half_stride + g.stride * x;
          for (double m : set.multipliers) {
            const double h = 0.5 * g.base_size * m;
            set.boxes.emplace_back(cz - h, cy - h, cx - h, cz + h, cy + h, cx + h);
          }
        }
  }
  return set;
}

Delta6 encode_deltas(const Box3D& anchor, const Box3D& gt) {
  Delta6 d;
  for (int a = 0; a < 3; ++a) {
    const double side = anchor.extent(a);
    d[a] = (gt.center(a) - anchor.center(a)) / side;
    d[3 + a] = std::log(gt.extent(a) / side);
  }
  return d;
}

Box3D decode_deltas(const Box3D& anchor, const Delta6& d) {
  Box3D b;
  for (int a = 0; a < 3; ++a) {
    const double side = anchor.extent(a);
    const double c = anchor.center(a) + d[a] * side;
    const double e = side * std::exp(std::clamp(d[3 + a], -kLogRatioClamp, kLogRatioClamp));
    b.lo[a] = c - 0.5 * e;
    b.hi[a] = c + 0.5 * e;
  }
  return b;
}

MatchResult match_anchors(const AnchorSet& anchors, const std::vector<Annotation>& gts, double iou_t) {
  if (!(iou_t > 0.0 && iou_t < 1.0)) throw std::invalid_argument("match.iou must lie in (0,1)");
  const std::size_t n = anchors.size();
  const int g = static_cast<int>(gts.size());
  MatchResult r;
  r.gt_index.assign(n, -1);
  r.target_class.assign(n, 0);
  r.deltas.assign(n, Delta6{});
  if (g == 0) return r;

  std::vector<double> iou(n * static_cast<std::size_t>(g));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    double best = -1.0;
    int arg = -1;
    for (int j = 0; j < g; ++j) {
      const double v = iou3d(anchors.boxes[i], gts[j].box);
      iou[static_cast<std::size_t>(i) * g + j] = v;
      if (v > best) {
        best = v;
        arg = j;
      }
    }
    if (best >= iou_t) r.gt_index[i] = arg;
  }

  // forced positives. gts claim anchors in order of their best IoU (desc, lower index first);
  // each takes its max-IoU anchor among those not yet claimed, lowest id on ties
  std::vector<double> gt_best(static_cast<std::size_t>(g), -1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (int j = 0; j < g; ++j) gt_best[j] = std::max(gt_best[j], iou[i * g + j]);
  std::vector<int> order(static_cast<std::size_t>(g));
  for (int j = 0; j < g; ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return gt_best[a] > gt_best[b]; });
  std::vector<char> claimed(n, 0);
  for (int j : order) {
    double best = -1.0;
    std::size_t arg = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (claimed[i]) continue;
      const double v = iou[i * g + j];
      if (v > best) {
        best = v;
        arg = i;
      }
    }
    if (arg == n) continue;  // more gts than anchors
    claimed[arg] = 1;
    r.gt_index[arg] = j;
  }

  for (std::size_t i = 0; i < n; ++i) {
    const int j = r.gt_index[i];
    if (j < 0) continue;
    r.positives.push_back(i);
    r.target_class[i] = 1 + gts[j].class_id;
    r.deltas[i] = encode_deltas(anchors.boxes[i], gts[j].box);
  }
  return r;
}

}  // namespace baggagedet::anchors
