// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "baggagedet/net3d/tensor.hpp"

namespace baggagedet::net3d {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moment buffers follow the parameter list order.
class Adam {
 public:
  Adam() = default;
  Adam(const std::vector<Param<float>*>& params, AdamConfig cfg = {});

  void step(const std::vector<Param<float>*>& params, double lr);
  std::int64_t steps() const { return t_; }

  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  std::int64_t t_ = 0;
  AdamConfig cfg;
};

struct LrStage {
  double lr = 1e-3;
  int epochs = 20;
};

/// Staged schedule (1e-3, 1e-4, 1e-5) for E epochs each, or explicit per-stage epochs.
std::vector<LrStage> default_schedule(int epochs_per_stage);
/// Throws if lrs are not strictly decreasing or an epoch count is < 1.
void validate(const std::vector<LrStage>& schedule);
int total_epochs(const std::vector<LrStage>& schedule);
/// lr for 0-based epoch index; the stage index is returned through `stage` when non-null.
double lr_at(const std::vector<LrStage>& schedule, int epoch, int* stage = nullptr);

}  // namespace baggagedet::net3d
