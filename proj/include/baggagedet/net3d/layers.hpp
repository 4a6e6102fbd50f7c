// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "baggagedet/core/rng.hpp"
#include "baggagedet/kernels/conv3d.hpp"
#include "baggagedet/net3d/tensor.hpp"

namespace baggagedet::net3d {

// Layers hold parameters only. Activations needed by backward are kept by the caller, which
// lets one layer instance (the shared heads) run on several pyramid levels per step.

template <class T>
class Conv3d {
 public:
  Conv3d() = default;
  Conv3d(const std::string& name, int cin, int cout, int k, int stride, int pad, bool bias);

  Tensor<T> forward(const Tensor<T>& x) const;
  /// Accumulates parameter gradients; returns dL/dx when need_dx, else an empty tensor.
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& dy, bool need_dx);

  /// He-normal weights (std sqrt(2/fan_in)), zero bias.
  void init_he(Rng& rng);
  /// Normal weights with the given std, zero bias.
  void init_normal(Rng& rng, double std);

  void collect(std::vector<Param<T>*>& out);
  int cin() const { return cin_; }
  int cout() const { return cout_; }
  kernels::ConvGeom geom(const std::array<int, 3>& in) const;

  Param<T> weight;
  Param<T> bias;
  bool has_bias = false;

 private:
  int cin_ = 0, cout_ = 0, k_ = 3, stride_ = 1, pad_ = 1;
};

/// Group normalization with per-channel affine. Statistics are per sample and per group.
template <class T>
class GroupNorm {
 public:
  GroupNorm() = default;
  GroupNorm(const std::string& name, int channels, int groups, double eps = 1e-5);

  Tensor<T> forward(const Tensor<T>& x) const;
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& dy);
  void collect(std::vector<Param<T>*>& out);
  int groups() const { return groups_; }

  Param<T> gamma;
  Param<T> beta;

 private:
  void stats(const Tensor<T>& x, std::vector<double>& mean, std::vector<double>& rstd) const;
  int channels_ = 0, groups_ = 1;
  double eps_ = 1e-5;
};

/// Largest divisor of `channels` not exceeding `max_groups`.
int group_count(int channels, int max_groups);

/// Digest of the branch taken by every ReLU and max-pool window during a forward pass. When
/// the digests at θ-ε, θ and θ+ε agree, no kink lies between the probe points (barring an
/// even number of crossings), so central differences are a valid oracle there. Inactive
/// unless installed.
struct KinkTrace {
  std::uint64_t digest = 0;
  void mix(std::uint64_t v);
};

/// Installs `trace` for the current thread (nullptr uninstalls).
void set_kink_trace(KinkTrace* trace);
KinkTrace* kink_trace();

template <class T>
Tensor<T> relu(const Tensor<T>& x);
/// dy masked by y > 0, where y is the ReLU output.
template <class T>
Tensor<T> relu_backward(const Tensor<T>& y, const Tensor<T>& dy);
template <class T>
void relu_inplace(Tensor<T>& x);

/// 3x3x3 max pooling, stride 2, padding 1. Ties go to the first tap in raster order.
template <class T>
Tensor<T> maxpool3(const Tensor<T>& x);
template <class T>
Tensor<T> maxpool3_backward(const Tensor<T>& x, const Tensor<T>& dy);

/// Nearest-neighbour 2x upsampling.
template <class T>
Tensor<T> upsample2(const Tensor<T>& x);
template <class T>
Tensor<T> upsample2_backward(const Tensor<T>& dy);

template <class T>
void add_inplace(Tensor<T>& a, const Tensor<T>& b);

}  // namespace baggagedet::net3d
