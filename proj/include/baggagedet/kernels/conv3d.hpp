// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>

namespace baggagedet::kernels {

/// Cubic-kernel 3D convolution geometry. Tensors are channels-last:
///   x  [D][H][W][cin]
///   w  [k][k][k][cin][cout]   (equivalently a (k³·cin) x cout matrix)
///   y  [Do][Ho][Wo][cout]
struct ConvGeom {
  std::array<int, 3> in{};  // (D, H, W)
  int cin = 1;
  int cout = 1;
  int k = 3;
  int stride = 1;
  int pad = 1;

  std::array<int, 3> out() const;
  std::size_t in_positions() const;
  std::size_t out_positions() const;
  std::size_t patch() const { return static_cast<std::size_t>(k) * k * k * cin; }
  std::size_t weight_count() const { return patch() * cout; }
  /// True when the convolution is a plain per-voxel matrix product.
  bool pointwise() const { return k == 1 && stride == 1 && pad == 0; }
};

/// Throws std::invalid_argument for non-positive sizes or empty output.
void validate(const ConvGeom& g);

/// y = conv(x, w) + b. `b` may be null.
template <class T>
void conv3d_forward(const ConvGeom& g, const T* x, const T* w, const T* b, T* y);

/// Accumulates dw += dL/dw and db += dL/db (db may be null), and writes dx = dL/dx when dx is
/// non-null (overwrites).
template <class T>
void conv3d_backward(const ConvGeom& g, const T* x, const T* w, const T* dy, T* dx, T* dw, T* db);

/// Row-major C = alpha * op(A) * op(B) + beta * C.
template <class T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, int lda, const T* b, int ldb,
          T beta, T* c, int ldc);

/// Serial direct-loop convolution, used as the test and benchmark baseline.
namespace reference {
template <class T>
void conv3d_forward(const ConvGeom& g, const T* x, const T* w, const T* b, T* y);
template <class T>
void conv3d_backward(const ConvGeom& g, const T* x, const T* w, const T* dy, T* dx, T* dw, T* db);
}  // namespace reference

}  // namespace baggagedet::kernels
