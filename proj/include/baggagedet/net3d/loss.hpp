// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "baggagedet/anchors/anchors.hpp"

namespace baggagedet::net3d {

struct LossConfig {
  int num_classes = 5;        // K
  double neg_ratio = 3.0;     // hard negatives per positive
  bool focal = false;         // softmax focal loss over all anchors instead of mined CE
  double focal_gamma = 2.0;
};

struct LossParts {
  double cls_loss = 0.0;
  double reg_loss = 0.0;
  double total = 0.0;
  int num_positive = 0;
  int num_negative = 0;  // negatives that contributed to cls_loss
  /// Hash of the set of anchors in the classification term; the mined loss is smooth only
  /// while this set is fixed.
  std::uint64_t selection_digest = 0;
};

/// Loss and, when the output pointers are non-null, its gradient w.r.t. the flattened logits
/// [A][1+K] and deltas [A][6]. Mined CE: positives plus the max(r·|pos|, 1) negatives with the
/// highest foreground probability (lower anchor id first on ties), averaged over that set.
/// Smooth-L1 (delta 1) is summed over the 6 components and averaged over positives.
template <class T>
LossParts compute_loss(const std::vector<T>& cls_logits, const std::vector<T>& reg, const anchors::MatchResult& match,
                       const LossConfig& cfg, std::vector<T>* d_cls = nullptr, std::vector<T>* d_reg = nullptr);

/// Softmax over one anchor's (1+K) logits, computed stably.
template <class T>
void softmax_row(const T* logits, int n, double* out);

}  // namespace baggagedet::net3d
