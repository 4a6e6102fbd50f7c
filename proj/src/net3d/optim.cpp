// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/net3d/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace baggagedet::net3d {

Adam::Adam(const std::vector<Param<float>*>& params, AdamConfig c) : cfg(c) {
  for (const auto* p : params) {
    m.emplace_back(p->size(), 0.0f);
    v.emplace_back(p->size(), 0.0f);
  }
}

void Adam::step(const std::vector<Param<float>*>& params, double lr) {
  if (params.size() != m.size()) throw std::invalid_argument("optimizer state does not match the parameter list");
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
  const float b1 = static_cast<float>(cfg.beta1), b2 = static_cast<float>(cfg.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    auto& mi = m[i];
    auto& vi = v[i];
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(p.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      const float g = p.grad[j];
      mi[j] = b1 * mi[j] + (1.0f - b1) * g;
      vi[j] = b2 * vi[j] + (1.0f - b2) * g * g;
      const double mhat = mi[j] / bc1;
      const double vhat = vi[j] / bc2;
      p.value[j] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  }
}

std::vector<LrStage> default_schedule(int epochs_per_stage) {
  return {{1e-3, epochs_per_stage}, {1e-4, epochs_per_stage}, {1e-5, epochs_per_stage}};
}

void validate(const std::vector<LrStage>& schedule) {
  if (schedule.empty()) throw std::invalid_argument("train.lrs must list at least one stage");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i].lr >= 0.0) || !std::isfinite(schedule[i].lr))
      throw std::invalid_argument("train.lrs must be finite and non-negative");
    if (schedule[i].epochs < 1) throw std::invalid_argument("train.epochs must be >= 1 per stage");
    if (i > 0 && !(schedule[i].lr < schedule[i - 1].lr))
      throw std::invalid_argument("train.lrs must be strictly decreasing");
  }
}

int total_epochs(const std::vector<LrStage>& schedule) {
  int n = 0;
  for (const auto& s : schedule) n += s.epochs;
  return n;
}

double lr_at(const std::vector<LrStage>& schedule, int epoch, int* stage) {
  int start = 0;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (epoch < start + schedule[i].epochs) {
      if (stage) *stage = static_cast<int>(i);
      return schedule[i].lr;
    }
    start += schedule[i].epochs;
  }
  throw std::out_of_range("epoch beyond the learning-rate schedule");
}

}  // namespace baggagedet::net3d
