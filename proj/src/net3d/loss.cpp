// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/net3d/loss.hpp"

#include "baggagedet/core/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace baggagedet::net3d {

template <class T>
void softmax_row(const T* logits, int n, double* out) {
  double mx = logits[0];
  for (int i = 1; i < n; ++i) mx = std::max<double>(mx, logits[i]);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    out[i] = std::exp(static_cast<double>(logits[i]) - mx);
    sum += out[i];
  }
  for (int i = 0; i < n; ++i) out[i] /= sum;
}

namespace {

double smooth_l1(double x) {
  const double a = std::abs(x);
  return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

double smooth_l1_grad(double x) {
  if (x > 1.0) return 1.0;
  if (x < -1.0) return -1.0;
  return x;
}

}  // namespace

template <class T>
LossParts compute_loss(const std::vector<T>& cls_logits, const std::vector<T>& reg, const anchors::MatchResult& match,
                       const LossConfig& cfg, std::vector<T>* d_cls, std::vector<T>* d_reg) {
  const int nc = cfg.num_classes + 1;
  const std::size_t A = match.gt_index.size();
  if (cls_logits.size() != A * nc || reg.size() != A * 6)
    throw std::invalid_argument("loss: head outputs cover " + std::to_string(cls_logits.size() / nc) +
                                " anchors, match covers " + std::to_string(A));
  if (d_cls) d_cls->assign(cls_logits.size(), T(0));
  if (d_reg) d_reg->assign(reg.size(), T(0));

  LossParts parts;
  const auto& pos = match.positives;
  parts.num_positive = static_cast<int>(pos.size());

  std::vector<double> probs(A * nc);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(A); ++i)
    softmax_row(cls_logits.data() + i * nc, nc, probs.data() + i * nc);

  // anchors contributing to the classification term
  std::vector<std::size_t> selected;
  double norm = 1.0;
  if (cfg.focal) {
    selected.resize(A);
    std::iota(selected.begin(), selected.end(), std::size_t{0});
    norm = std::max<double>(1.0, static_cast<double>(pos.size()));
    parts.num_negative = static_cast<int>(A - pos.size());
  } else {
    std::vector<std::size_t> negs;
    negs.reserve(A);
    for (std::size_t i = 0; i < A; ++i)
      if (match.gt_index[i] < 0) negs.push_back(i);
    const std::size_t want = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(cfg.neg_ratio * static_cast<double>(pos.size()))));
    const std::size_t k = std::min(want, negs.size());
    auto harder = [&](std::size_t a, std::size_t b) {
      const double fa = 1.0 - probs[a * nc], fb = 1.0 - probs[b * nc];
      return fa != fb ? fa > fb : a < b;
    };
    std::partial_sort(negs.begin(), negs.begin() + static_cast<std::ptrdiff_t>(k), negs.end(), harder);
    selected.assign(pos.begin(), pos.end());
    selected.insert(selected.end(), negs.begin(), negs.begin() + static_cast<std::ptrdiff_t>(k));
    parts.num_negative = static_cast<int>(k);
    norm = std::max<double>(1.0, static_cast<double>(selected.size()));
    std::vector<std::size_t> sorted = selected;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t id : sorted) parts.selection_digest = mix64(parts.selection_digest ^ mix64(id));
  }

  double cls_sum = 0.0;
  for (std::size_t i : selected) {
    const int t = match.target_class[i];
    const double* p = probs.data() + i * nc;
    const double pt = std::max(p[t], 1e-300);
    if (cfg.focal) {
      const double w = std::pow(1.0 - pt, cfg.focal_gamma);
      cls_sum += -w * std::log(pt);
      if (d_cls) {
        // dL/dpt, chained through dpt/dz_j = pt (delta_tj - p_j)
        const double dpt = (cfg.focal_gamma > 0 ? cfg.focal_gamma * std::pow(1.0 - pt, cfg.focal_gamma - 1.0) *
                                                      std::log(pt)
                                                : 0.0) -
                           w / pt;
        for (int j = 0; j < nc; ++j)
          (*d_cls)[i * nc + j] = static_cast<T>(dpt * pt * ((j == t ? 1.0 : 0.0) - p[j]) / norm);
      }
    } else {
      cls_sum += -std::log(pt);
      if (d_cls)
        for (int j = 0; j < nc; ++j) (*d_cls)[i * nc + j] = static_cast<T>((p[j] - (j == t ? 1.0 : 0.0)) / norm);
    }
  }
  parts.cls_loss = cls_sum / norm;

  if (!pos.empty()) {
    const double inv = 1.0 / static_cast<double>(pos.size());
    double reg_sum = 0.0;
    for (std::size_t i : pos) {
      for (int j = 0; j < 6; ++j) {
        const double diff = static_cast<double>(reg[i * 6 + j]) - match.deltas[i][j];
        reg_sum += smooth_l1(diff);
        if (d_reg) (*d_reg)[i * 6 + j] = static_cast<T>(smooth_l1_grad(diff) * inv);
      }
    }
    parts.reg_loss = reg_sum * inv;
  }
  parts.total = parts.cls_loss + parts.reg_loss;
  return parts;
}

template void softmax_row<float>(const float*, int, double*);
template void softmax_row<double>(const double*, int, double*);
template LossParts compute_loss<float>(const std::vector<float>&, const std::vector<float>&,
                                       const anchors::MatchResult&, const LossConfig&, std::vector<float>*,
                                       std::vector<float>*);
template LossParts compute_loss<double>(const std::vector<double>&, const std::vector<double>&,
                                        const anchors::MatchResult&, const LossConfig&, std::vector<double>*,
                                        std::vector<double>*);

}  // namespace baggagedet::net3d
