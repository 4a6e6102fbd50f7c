// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "baggagedet/anchors/anchors.hpp"
#include "baggagedet/net3d/checkpoint.hpp"
#include "baggagedet/net3d/model.hpp"
#include "baggagedet/volcore/box.hpp"
#include "baggagedet/volcore/volume.hpp"

namespace baggagedet::evalkit {

struct Detection {
  Box3D box;  // input-volume coordinates
  int class_id = 0;
  double score = 0.0;
  std::string volume_id;

  friend bool operator==(const Detection&, const Detection&) = default;
};

enum class PrMode { FixedThreshold, MaxF1 };

struct EvalConfig {
  double tp_iou = 0.1;
  double score_threshold = 0.5;  // operating point for precision/recall
  double nms_iou = 0.1;
  int max_detections = 100;
  double score_floor = 0.05;
  PrMode pr_mode = PrMode::FixedThreshold;
};

/// Throws std::invalid_argument naming the offending eval.* key.
void validate(const EvalConfig& cfg);

/// Greedy NMS: keep the highest score, drop every remaining box with IoU >= iou_t against it,
/// repeat. Equal scores keep input order. The input is expected to share class and volume.
std::vector<Detection> nms3d(const std::vector<Detection>& dets, double iou_t);

/// Head outputs to detections: softmax, drop background, score floor, decode, map back by
/// `scale`, clip to `original_dims`, per-class NMS, then the top max_detections by score.
template <class T>
std::vector<Detection> postprocess(const std::vector<T>& cls_logits, const std::vector<T>& reg,
                                   const anchors::AnchorSet& anchors, int num_classes, const EvalConfig& cfg,
                                   int scale, const Dims3& original_dims, const std::string& volume_id);

/// Full inference on one volume: channel selection, resample, pad, forward, postprocess.
std::vector<Detection> detect(net3d::Model<float>& model, const net3d::DetectorSpec& spec, const Volume& v,
                              const EvalConfig& cfg, const std::string& volume_id);

}  // namespace baggagedet::evalkit
