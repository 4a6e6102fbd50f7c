// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/evalkit/detect.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "baggagedet/net3d/loss.hpp"
#include "baggagedet/net3d/train.hpp"

namespace baggagedet::evalkit {

void validate(const EvalConfig& cfg) {
  auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (!in_unit(cfg.tp_iou)) throw std::invalid_argument("eval.tp_iou must lie in (0,1)");
  if (!in_unit(cfg.score_threshold)) throw std::invalid_argument("eval.score_threshold must lie in (0,1)");
  if (!in_unit(cfg.nms_iou)) throw std::invalid_argument("eval.nms_iou must lie in (0,1)");
  if (!(cfg.score_floor >= 0.0 && cfg.score_floor < 1.0)) throw std::invalid_argument("eval.score_floor must lie in [0,1)");
  if (cfg.max_detections < 1) throw std::invalid_argument("eval.max_detections must be >= 1");
}

std::vector<Detection> nms3d(const std::vector<Detection>& dets, double iou_t) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  std::vector<char> removed(dets.size(), 0);
  std::vector<Detection> kept;
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t i = order[oi];
    if (removed[i]) continue;
    kept.push_back(dets[i]);
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const std::size_t j = order[oj];
      if (!removed[j] && iou3d(dets[i].box, dets[j].box) >= iou_t) removed[j] = 1;
    }
  }
  return kept;
}

template <class T>
std::vector<Detection> postprocess(const std::vector<T>& cls_logits, const std::vector<T>& reg,
                                   const anchors::AnchorSet& anchors, int num_classes, const EvalConfig& cfg,
                                   int scale, const Dims3& original_dims, const std::string& volume_id) {
  const int nc = num_classes + 1;
  const std::size_t A = anchors.size();
  if (cls_logits.size() != A * nc || reg.size() != A * 6)
    throw std::invalid_argument("head outputs do not match the anchor grid");
  std::vector<std::vector<Detection>> per_class(static_cast<std::size_t>(num_classes));
  std::vector<double> p(static_cast<std::size_t>(nc));
  for (std::size_t i = 0; i < A; ++i) {
    net3d::softmax_row(cls_logits.data() + i * nc, nc, p.data());
    bool decoded = false;
    Box3D box;
    for (int c = 1; c < nc; ++c) {
      if (p[c] < cfg.score_floor) continue;
      if (!decoded) {
        anchors::Delta6 d;
        for (int j = 0; j < 6; ++j) d[j] = static_cast<double>(reg[i * 6 + j]);
        box = decode_deltas(anchors.boxes[i], d);
        for (int a = 0; a < 3; ++a) {
          box.lo[a] *= scale;
          box.hi[a] *= scale;
        }
        box = clip_to(box, original_dims);
        decoded = true;
      }
      if (!is_valid(box)) break;  // entirely outside the volume (padding region)
      per_class[static_cast<std::size_t>(c - 1)].push_back({box, c - 1, p[c], volume_id});
    }
  }
  std::vector<Detection> out;
  for (auto& dets : per_class) {
    auto kept = nms3d(dets, cfg.nms_iou);
    out.insert(out.end(), kept.begin(), kept.end());
  }
  std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) { return a.score > b.score; });
  if (out.size() > static_cast<std::size_t>(cfg.max_detections)) out.resize(static_cast<std::size_t>(cfg.max_detections));
  return out;
}

template std::vector<Detection> postprocess<float>(const std::vector<float>&, const std::vector<float>&,
                                                   const anchors::AnchorSet&, int, const EvalConfig&, int,
                                                   const Dims3&, const std::string&);
template std::vector<Detection> postprocess<double>(const std::vector<double>&, const std::vector<double>&,
                                                    const anchors::AnchorSet&, int, const EvalConfig&, int,
                                                    const Dims3&, const std::string&);

std::vector<Detection> detect(net3d::Model<float>& model, const net3d::DetectorSpec& spec, const Volume& v,
                              const EvalConfig& cfg, const std::string& volume_id) {
  validate(cfg);
  const auto prepared = net3d::prepare_sample(v, {}, spec);
  const auto grid = anchors::build_anchor_grid(prepared.volume.dims(), spec.anchors);
  const auto fwd = model.forward(net3d::to_tensor<float>(prepared.volume), false);
  return postprocess(net3d::flatten_cls(fwd.heads), net3d::flatten_reg(fwd.heads), grid, spec.model.num_classes, cfg,
                     spec.scale.s, v.dims(), volume_id);
}

}  // namespace baggagedet::evalkit
