// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/net3d/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "baggagedet/anchors/anchors.hpp"

namespace baggagedet::net3d {

ModelConfig tiny_model_config() {
  ModelConfig m;
  m.depth = 10;
  m.widths = {2, 2, 2, 2};
  m.fpn_width = 2;
  m.norm_groups = 8;
  return m;
}

GradCheckResult grad_check(const GradCheckConfig& cfg) {
  ModelConfig mc = cfg.model;
  mc.seed = cfg.seed;
  Model<double> model(mc);
  if (cfg.jitter > 0) {
    Rng jr = make_rng(cfg.seed, {0x717});
    for (auto* p : model.params())
      if (p->shape.size() == 1)
        for (auto& v : p->value) v += cfg.jitter * normal01(jr);
  }

  const int padded = ((cfg.input_extent + 31) / 32) * 32;
  Tensor<double> x({padded, padded, padded}, mc.in_channels);
  Rng rng = make_rng(cfg.seed, {0x9c});
  for (int z = 0; z < cfg.input_extent; ++z)
    for (int y = 0; y < cfg.input_extent; ++y)
      for (int xx = 0; xx < cfg.input_extent; ++xx)
        for (int c = 0; c < mc.in_channels; ++c) x.at(z, y, xx, c) = uniform01(rng);

  anchors::AnchorConfig ac;
  ac.levels = mc.levels;
  ac.base_sizes.clear();
  for (int l : mc.levels) ac.base_sizes.push_back(8.0 * (1 << l));
  const auto grid = anchors::build_anchor_grid({padded, padded, padded}, ac);
  const double e = cfg.input_extent;
  const std::vector<Annotation> gts = {{Box3D(0.2 * e, 0.25 * e, 0.1 * e, 0.7 * e, 0.8 * e, 0.55 * e), 1, 0}};
  const auto match = anchors::match_anchors(grid, gts, anchors::kDefaultMatchIou);
  LossConfig lc = cfg.loss;
  lc.num_classes = mc.num_classes;

  struct Probe {
    double loss;
    std::uint64_t digest;
  };
  auto probe = [&]() {
    KinkTrace trace;
    set_kink_trace(&trace);
    const auto r = model.forward(x, false);
    set_kink_trace(nullptr);
    const auto parts = compute_loss(flatten_cls(r.heads), flatten_reg(r.heads), match, lc);
    return Probe{parts.total, mix64(trace.digest ^ parts.selection_digest)};
  };

  GradCheckResult res;
  model.zero_grad();
  {
    const auto r = model.forward(x, true);
    std::vector<double> dc, dr;
    res.loss = compute_loss(flatten_cls(r.heads), flatten_reg(r.heads), match, lc, &dc, &dr).total;
    model.backward(dc, dr);
  }
  const std::uint64_t base = probe().digest;
  auto rel_error = [&](double a, double n) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), cfg.floor});
  };

  for (auto* p : model.params()) {
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double saved = p->value[i];
      const double analytic = p->grad[i];
      double eps = cfg.eps;
      bool nominal = true;
      bool resolved = false;
      double numeric = 0.0;
      while (eps >= cfg.min_eps) {
        p->value[i] = saved + eps;
        const Probe hi = probe();
        p->value[i] = saved - eps;
        const Probe lo = probe();
        p->value[i] = saved;
        numeric = (hi.loss - lo.loss) / (2.0 * eps);
        if (nominal) res.max_rel_error_raw = std::max(res.max_rel_error_raw, rel_error(analytic, numeric));
        if (hi.digest == base && lo.digest == base) {
          resolved = true;
          break;
        }
        if (nominal) ++res.num_kinked;
        nominal = false;
        eps *= 0.1;
      }
      ++res.num_checked;
      if (!resolved) {
        ++res.num_unresolved;
        continue;
      }
      const double rel = rel_error(analytic, numeric);
      if (nominal) res.max_rel_error_nominal = std::max(res.max_rel_error_nominal, rel);
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst_param = p->name;
        res.worst_index = i;
        res.worst_analytic = analytic;
        res.worst_numeric = numeric;
      }
    }
  }
  return res;
}

}  // namespace baggagedet::net3d
