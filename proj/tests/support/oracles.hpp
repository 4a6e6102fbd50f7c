// SPDX-License-Identifier: Apache-2.0
// Brute-force reference implementations used only by tests. Each one is written from the
// definition, independently of the library code it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "baggagedet/anchors/anchors.hpp"
#include "baggagedet/evalkit/metrics.hpp"
#include "baggagedet/volcore/box.hpp"

namespace oracle {

using baggagedet::Annotation;
using baggagedet::Box3D;

/// IoU of integer boxes by rasterizing both into an occupancy grid and counting voxels.
inline double raster_iou(const Box3D& a, const Box3D& b, int extent) {
  long inter = 0, uni = 0;
  for (int z = 0; z < extent; ++z)
    for (int y = 0; y < extent; ++y)
      for (int x = 0; x < extent; ++x) {
        auto in = [&](const Box3D& q) {
          return q.lo[0] <= z && z < q.hi[0] && q.lo[1] <= y && y < q.hi[1] && q.lo[2] <= x && x < q.hi[2];
        };
        const bool ia = in(a), ib = in(b);
        inter += ia && ib;
        uni += ia || ib;
      }
  return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

/// Continuous IoU from per-axis overlap lengths (works for fractional anchors).
inline double overlap_iou(const Box3D& a, const Box3D& b) {
  double inter = 1.0, va = 1.0, vb = 1.0;
  for (int ax = 0; ax < 3; ++ax) {
    inter *= std::max(0.0, std::min(a.hi[ax], b.hi[ax]) - std::max(a.lo[ax], b.lo[ax]));
    va *= a.hi[ax] - a.lo[ax];
    vb *= b.hi[ax] - b.lo[ax];
  }
  const double u = va + vb - inter;
  return u > 0 ? inter / u : 0.0;
}

/// O(A·G) matcher following the documented rule literally.
struct Match {
  std::vector<int> gt_index;
};

inline Match brute_match(const std::vector<Box3D>& anchors, const std::vector<Annotation>& gts, double iou_t) {
  const std::size_t A = anchors.size(), G = gts.size();
  std::vector<std::vector<double>> iou(A, std::vector<double>(G));
  for (std::size_t i = 0; i < A; ++i)
    for (std::size_t g = 0; g < G; ++g) iou[i][g] = overlap_iou(anchors[i], gts[g].box);
  Match m;
  m.gt_index.assign(A, -1);
  for (std::size_t i = 0; i < A; ++i) {
    int best = -1;
    double bv = -1;
    for (std::size_t g = 0; g < G; ++g)
      if (iou[i][g] > bv) {
        bv = iou[i][g];
        best = static_cast<int>(g);
      }
    if (best >= 0 && bv >= iou_t) m.gt_index[i] = best;
  }
  // forced positives
  std::vector<double> gbest(G, 0.0);
  for (std::size_t g = 0; g < G; ++g)
    for (std::size_t i = 0; i < A; ++i) gbest[g] = std::max(gbest[g], iou[i][g]);
  std::vector<std::size_t> order(G);
  for (std::size_t g = 0; g < G; ++g) order[g] = g;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return gbest[a] != gbest[b] ? gbest[a] > gbest[b] : a < b;
  });
  std::vector<bool> claimed(A, false);
  for (std::size_t g : order) {
    std::size_t pick = A;
    for (std::size_t i = 0; i < A; ++i) {
      if (claimed[i]) continue;
      if (pick == A || iou[i][g] > iou[pick][g]) pick = i;
    }
    if (pick == A) continue;
    claimed[pick] = true;
    m.gt_index[pick] = static_cast<int>(g);
  }
  return m;
}

/// Repeated selection of the best remaining detection; ties go to the lowest input index.
inline std::vector<std::size_t> brute_nms(const std::vector<baggagedet::evalkit::Detection>& d, double t) {
  std::vector<bool> alive(d.size(), true);
  std::vector<std::size_t> kept;
  while (true) {
    std::size_t best = d.size();
    for (std::size_t i = 0; i < d.size(); ++i)
      if (alive[i] && (best == d.size() || d[i].score > d[best].score)) best = i;
    if (best == d.size()) break;
    kept.push_back(best);
    for (std::size_t i = 0; i < d.size(); ++i)
      if (alive[i] && overlap_iou(d[i].box, d[best].box) >= t) alive[i] = false;
  }
  return kept;
}

/// All-point AP as a sum over true positives: each TP contributes 1/num_gt times the best
/// precision reached at or after its rank.
inline double brute_ap(const std::vector<bool>& tp, int num_gt) {
  if (num_gt <= 0) return 0.0;
  const std::size_t n = tp.size();
  double ap = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!tp[k]) continue;
    double best = 0.0;
    int hits = 0;
    for (std::size_t j = 0; j < n; ++j) {
      hits += tp[j];
      if (j >= k) best = std::max(best, static_cast<double>(hits) / static_cast<double>(j + 1));
    }
    ap += best / num_gt;
  }
  return ap;
}

/// Evaluation by exhaustive enumeration of one-to-one assignments. Among all valid
/// assignments (same class, same volume, IoU >= tp_iou), the chosen one maximizes, in
/// detection rank order, the matched IoU, then prefers the lower gt index: exactly what a
/// greedy highest-IoU matcher produces, found here without greediness.
inline baggagedet::evalkit::Metrics brute_evaluate(const baggagedet::evalkit::DetectionsByVolume& dets,
                                                    const baggagedet::evalkit::GroundTruthByVolume& gts,
                                                    const baggagedet::evalkit::EvalConfig& cfg, int num_classes) {
  using baggagedet::evalkit::ClassMetrics;
  using baggagedet::evalkit::Detection;
  baggagedet::evalkit::Metrics m;
  m.per_class.resize(static_cast<std::size_t>(num_classes));
  double sum = 0;
  for (int c = 0; c < num_classes; ++c) {
    struct R {
      Detection d;
      std::string vid;
      std::size_t idx;
    };
    std::vector<R> ranked;
    for (const auto& [vid, list] : dets)
      for (std::size_t i = 0; i < list.size(); ++i)
        if (list[i].class_id == c) ranked.push_back({list[i], vid, i});
    std::stable_sort(ranked.begin(), ranked.end(), [](const R& a, const R& b) {
      if (a.d.score != b.d.score) return a.d.score > b.d.score;
      if (a.vid != b.vid) return a.vid < b.vid;
      return a.idx < b.idx;
    });
    struct G {
      Box3D box;
      std::string vid;
    };
    std::vector<G> g;
    for (const auto& [vid, anns] : gts)
      for (const auto& a : anns)
        if (a.class_id == c) g.push_back({a.box, vid});
    const std::size_t n = ranked.size();
    std::vector<int> assign(n, -1), best_assign;
    std::vector<std::pair<double, int>> best_key;
    std::vector<bool> used(g.size(), false);
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
      if (k == n) {
        std::vector<std::pair<double, int>> key;
        for (std::size_t i = 0; i < n; ++i) {
          const double iou = assign[i] >= 0 ? overlap_iou(ranked[i].d.box, g[static_cast<std::size_t>(assign[i])].box) : -1.0;
          key.push_back({iou, -assign[i]});
        }
        if (best_assign.empty() && n > 0 ? true : key > best_key) {
          best_key = key;
          best_assign = assign;
        }
        return;
      }
      assign[k] = -1;
      rec(k + 1);
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (used[j] || g[j].vid != ranked[k].vid) continue;
        if (overlap_iou(ranked[k].d.box, g[j].box) < cfg.tp_iou) continue;
        used[j] = true;
        assign[k] = static_cast<int>(j);
        rec(k + 1);
        used[j] = false;
        assign[k] = -1;
      }
    };
    rec(0);
    // the lexicographic key compares IoU first, then -gt_index (so lower index wins);
    // an unmatched slot has IoU -1 and loses against any match
    ClassMetrics& cm = m.per_class[static_cast<std::size_t>(c)];
    cm.num_gt = static_cast<int>(g.size());
    cm.has_gt = cm.num_gt > 0;
    cm.num_det = static_cast<int>(n);
    std::vector<bool> tp(n, false);
    for (std::size_t i = 0; i < n; ++i) tp[i] = !best_assign.empty() && best_assign[i] >= 0;
    cm.ap = brute_ap(tp, cm.num_gt);
    std::size_t len = 0;
    while (len < n && ranked[len].d.score >= cfg.score_threshold) ++len;
    int hits = 0;
    for (std::size_t i = 0; i < len; ++i) hits += tp[i];
    cm.num_tp = hits;
    cm.precision = len ? static_cast<double>(hits) / static_cast<double>(len) : 0.0;
    cm.recall = cm.num_gt ? static_cast<double>(hits) / cm.num_gt : 0.0;
    cm.precision_undefined = len == 0;
    if (cm.has_gt) {
      sum += cm.ap;
      ++m.classes_in_map;
    }
  }
  m.map = m.classes_in_map ? sum / m.classes_in_map : 0.0;
  return m;
}

}  // namespace oracle
