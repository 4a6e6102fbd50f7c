// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/evalkit/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace baggagedet::evalkit {

double average_precision(const std::vector<bool>& is_tp, int num_gt) {
  if (num_gt <= 0 || is_tp.empty()) return 0.0;
  const std::size_t n = is_tp.size();
  std::vector<double> prec(n), rec(n);
  int tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += is_tp[i] ? 1 : 0;
    prec[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    rec[i] = static_cast<double>(tp) / num_gt;
  }
  // precision envelope from the right
  for (std::size_t i = n - 1; i-- > 0;) prec[i] = std::max(prec[i], prec[i + 1]);
  double ap = 0.0, prev_r = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ap += (rec[i] - prev_r) * prec[i];
    prev_r = rec[i];
  }
  return ap;
}

namespace {

struct Ranked {
  const Detection* det;
  const std::string* volume;
  std::size_t index;  // position within its volume's list
};

}  // namespace

Metrics evaluate(const DetectionsByVolume& dets, const GroundTruthByVolume& gts, const EvalConfig& cfg,
                 int num_classes) {
  validate(cfg);
  if (num_classes < 1) throw std::invalid_argument("evaluate: num_classes must be >= 1");
  for (const auto& [vid, anns] : gts)
    for (const auto& a : anns)
      if (a.class_id < 0 || a.class_id >= num_classes)
        throw std::invalid_argument("evaluate: unknown class id " + std::to_string(a.class_id) + " in gt of " + vid);

  std::vector<std::vector<Ranked>> by_class(static_cast<std::size_t>(num_classes));
  for (const auto& [vid, list] : dets) {
    if (!gts.count(vid)) throw std::invalid_argument("evaluate: detections reference unknown volume " + vid);
    for (std::size_t i = 0; i < list.size(); ++i) {
      const int c = list[i].class_id;
      if (c < 0 || c >= num_classes)
        throw std::invalid_argument("evaluate: unknown class id " + std::to_string(c) + " in detections of " + vid);
      by_class[static_cast<std::size_t>(c)].push_back({&list[i], &vid, i});
    }
  }

  Metrics m;
  m.per_class.resize(static_cast<std::size_t>(num_classes));
  double ap_sum = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    auto& cm = m.per_class[static_cast<std::size_t>(c)];
    auto& ranked = by_class[static_cast<std::size_t>(c)];
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
      if (a.det->score != b.det->score) return a.det->score > b.det->score;
      if (*a.volume != *b.volume) return *a.volume < *b.volume;
      return a.index < b.index;
    });

    // gt of this class per volume, with a matched flag
    std::map<std::string, std::vector<std::pair<const Box3D*, bool>>> pool;
    for (const auto& [vid, anns] : gts)
      for (const auto& a : anns)
        if (a.class_id == c) {
          pool[vid].push_back({&a.box, false});
          ++cm.num_gt;
        }
    cm.has_gt = cm.num_gt > 0;
    cm.num_det = static_cast<int>(ranked.size());

    std::vector<bool> is_tp(ranked.size(), false);
    for (std::size_t k = 0; k < ranked.size(); ++k) {
      auto it = pool.find(*ranked[k].volume);
      if (it == pool.end()) continue;
      int best = -1;
      double best_iou = cfg.tp_iou;
      for (std::size_t g = 0; g < it->second.size(); ++g) {
        if (it->second[g].second) continue;
        const double iou = iou3d(ranked[k].det->box, *it->second[g].first);
        if (iou >= best_iou && (best < 0 || iou > best_iou)) {
          best = static_cast<int>(g);
          best_iou = iou;
        }
      }
      if (best >= 0) {
        it->second[static_cast<std::size_t>(best)].second = true;
        is_tp[k] = true;
      }
    }

    cm.ap = average_precision(is_tp, cm.num_gt);

    // P/R at a prefix of the ranking; prefixes end only where the score changes
    auto prefix_pr = [&](std::size_t len, double& p, double& r, int& tp) {
      tp = static_cast<int>(std::count(is_tp.begin(), is_tp.begin() + static_cast<std::ptrdiff_t>(len), true));
      p = len ? static_cast<double>(tp) / static_cast<double>(len) : 0.0;
      r = cm.num_gt ? static_cast<double>(tp) / cm.num_gt : 0.0;
    };
    std::size_t len = 0;
    if (cfg.pr_mode == PrMode::FixedThreshold) {
      while (len < ranked.size() && ranked[len].det->score >= cfg.score_threshold) ++len;
    } else {
      double best_f1 = -1.0;
      for (std::size_t i = 1; i <= ranked.size(); ++i) {
        if (i < ranked.size() && ranked[i].det->score == ranked[i - 1].det->score) continue;
        double p, r;
        int tp;
        prefix_pr(i, p, r, tp);
        const double f1 = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
        if (f1 > best_f1) {
          best_f1 = f1;
          len = i;
        }
      }
    }
    prefix_pr(len, cm.precision, cm.recall, cm.num_tp);
    cm.precision_undefined = len == 0;
    cm.operating_score = len ? ranked[len - 1].det->score : 0.0;

    if (cm.has_gt) {
      ap_sum += cm.ap;
      ++m.classes_in_map;
    }
  }
  m.map = m.classes_in_map ? ap_sum / m.classes_in_map : 0.0;
  return m;
}

Metrics restrict_map(const Metrics& m, const std::vector<int>& classes) {
  Metrics out = m;
  double sum = 0.0;
  out.classes_in_map = 0;
  for (int c : classes) {
    if (c < 0 || static_cast<std::size_t>(c) >= m.per_class.size())
      throw std::invalid_argument("restrict_map: unknown class id " + std::to_string(c));
    if (!m.per_class[static_cast<std::size_t>(c)].has_gt) continue;
    sum += m.per_class[static_cast<std::size_t>(c)].ap;
    ++out.classes_in_map;
  }
  out.map = out.classes_in_map ? sum / out.classes_in_map : 0.0;
  return out;
}

}  // namespace baggagedet::evalkit
