// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "baggagedet/net3d/loss.hpp"
#include "baggagedet/net3d/model.hpp"

namespace baggagedet::net3d {

/// Widths 2, depth 10, F = 2: a few thousand parameters.
ModelConfig tiny_model_config();

struct GradCheckConfig {
  ModelConfig model = tiny_model_config();
  int input_extent = 16;  // random content; zero padded to the next multiple of 32
  double eps = 1e-3;
  /// Relative error denominator floor, so parameters with vanishing gradients compare absolutely.
  double floor = 1e-8;
  /// Std of the normal jitter added to biases and norm affines before checking. At the
  /// initial point those are exactly 0 (or 1), which puts ReLUs over the zero-padded region
  /// precisely on their kink, where central differences and the analytic subgradient differ.
  double jitter = 0.1;
  double min_eps = 1e-7;
  LossConfig loss;
  std::uint64_t seed = 1;
};

struct GradCheckResult {
  /// Over every parameter, each compared on an interval free of kinks.
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t num_checked = 0;
  /// Parameters whose ±eps probes straddled a ReLU, max-pool or mining switch. These are
  /// re-probed with eps shrunk 10x at a time until the probes share the base point's branch pattern.
  std::size_t num_kinked = 0;
  /// Kinked parameters for which no eps down to min_eps avoided the kink (excluded from
  /// max_rel_error; reported through max_rel_error_raw).
  std::size_t num_unresolved = 0;
  /// Max over the parameters compared at the nominal eps (no kink in between).
  double max_rel_error_nominal = 0.0;
  /// Max over every parameter at the nominal eps, kinks included. Diagnostic only.
  double max_rel_error_raw = 0.0;
  double loss = 0.0;
};

/// Analytic gradient of the total loss against central differences, over every parameter, in
/// double precision. One ground-truth box. A finite difference that straddles a kink does not
/// estimate the derivative, so such probes are detected and repeated on a narrower interval.
GradCheckResult grad_check(const GradCheckConfig& cfg = {});

}  // namespace baggagedet::net3d
