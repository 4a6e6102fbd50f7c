// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "baggagedet/evalkit/detect.hpp"
#include "baggagedet/volcore/box.hpp"

namespace baggagedet::evalkit {

struct ClassMetrics {
  double ap = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  int num_gt = 0;
  int num_det = 0;
  int num_tp = 0;             // at the P/R operating point
  double operating_score = 0.0;  // score cutoff that produced precision/recall
  bool has_gt = false;        // false: excluded from mAP
  bool precision_undefined = false;  // no detections at the operating point; precision reported as 0
};

struct Metrics {
  std::vector<ClassMetrics> per_class;
  double map = 0.0;
  int classes_in_map = 0;
};

using DetectionsByVolume = std::map<std::string, std::vector<Detection>>;
using GroundTruthByVolume = std::map<std::string, std::vector<Annotation>>;

/// Per-class greedy TP assignment in score order, all-point AP, P/R at the configured operating
/// point, mAP over classes with at least one gt. Throws std::invalid_argument for class ids
/// outside [0, num_classes) or detections whose volume is absent from `gts`.
Metrics evaluate(const DetectionsByVolume& dets, const GroundTruthByVolume& gts, const EvalConfig& cfg,
                 int num_classes = kDefaultNumClasses);

/// Same metrics with mAP recomputed over `classes` only (the others keep their values).
Metrics restrict_map(const Metrics& m, const std::vector<int>& classes);

/// Area under the all-point interpolated PR curve for a ranked TP/FP sequence.
double average_precision(const std::vector<bool>& is_tp, int num_gt);

}  // namespace baggagedet::evalkit
