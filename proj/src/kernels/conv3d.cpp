// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/kernels/conv3d.hpp"

#include <cblas.h>

#include <algorithm>
#include <cstring>
#include <stdexcept>
#include <vector>

namespace baggagedet::kernels {

std::array<int, 3> ConvGeom::out() const {
  std::array<int, 3> o{};
  for (int a = 0; a < 3; ++a) o[a] = (in[a] + 2 * pad - k) / stride + 1;
  return o;
}

std::size_t ConvGeom::in_positions() const {
  return static_cast<std::size_t>(in[0]) * in[1] * in[2];
}

std::size_t ConvGeom::out_positions() const {
  const auto o = out();
  return static_cast<std::size_t>(o[0]) * o[1] * o[2];
}

void validate(const ConvGeom& g) {
  if (g.cin < 1 || g.cout < 1 || g.k < 1 || g.stride < 1 || g.pad < 0)
    throw std::invalid_argument("conv geometry: sizes must be positive");
  for (int a = 0; a < 3; ++a) {
    if (g.in[a] < 1) throw std::invalid_argument("conv geometry: empty input");
    if (g.in[a] + 2 * g.pad < g.k) throw std::invalid_argument("conv geometry: kernel larger than padded input");
  }
}

template <>
void gemm<float>(bool ta, bool tb, int m, int n, int k, float alpha, const float* a, int lda, const float* b, int ldb,
                 float beta, float* c, int ldc) {
  cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda,
              b, ldb, beta, c, ldc);
}

// OpenBLAS 0.3.20 with DYNAMIC_ARCH picks the Cooperlake dgemm kernels on some AVX-512 hosts and
// they return wrong results past ~100 columns. Double only backs gradient checks, so a plain
// row-parallel loop is enough here.
template <>
void gemm<double>(bool ta, bool tb, int m, int n, int k, double alpha, const double* a, int lda, const double* b,
                  int ldb, double beta, double* c, int ldc) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * ldc;
    std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
    for (int p = 0; p < k; ++p) {
      const double aip = ta ? a[static_cast<std::size_t>(p) * lda + i] : a[static_cast<std::size_t>(i) * lda + p];
      if (aip == 0.0) continue;
      if (tb) {
        for (int j = 0; j < n; ++j) acc[static_cast<std::size_t>(j)] += aip * b[static_cast<std::size_t>(j) * ldb + p];
      } else {
        const double* bp = b + static_cast<std::size_t>(p) * ldb;
        for (int j = 0; j < n; ++j) acc[static_cast<std::size_t>(j)] += aip * bp[j];
      }
    }
    for (int j = 0; j < n; ++j)
      ci[j] = alpha * acc[static_cast<std::size_t>(j)] + (beta == 0.0 ? 0.0 : beta * ci[j]);
  }
}

namespace {

template <class T>
std::vector<T>& workspace() {
  thread_local std::vector<T> buf;
  return buf;
}

// cols[p][tap][ci], rows are output positions
template <class T>
void im2col(const ConvGeom& g, const T* x, T* cols) {
  const auto o = g.out();
  const std::size_t patch = g.patch();
  const int k = g.k;
  const std::size_t cin = static_cast<std::size_t>(g.cin);
#pragma omp parallel for schedule(static)
  for (int oz = 0; oz < o[0]; ++oz) {
    for (int oy = 0; oy < o[1]; ++oy) {
      for (int ox = 0; ox < o[2]; ++ox) {
        T* row = cols + ((static_cast<std::size_t>(oz) * o[1] + oy) * o[2] + ox) * patch;
        for (int kz = 0; kz < k; ++kz) {
          const int iz = oz * g.stride - g.pad + kz;
          const bool zin = iz >= 0 && iz < g.in[0];
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * g.stride - g.pad + ky;
            const bool yin = zin && iy >= 0 && iy < g.in[1];
            const int ix0 = ox * g.stride - g.pad;
            if (!yin) {
              std::fill_n(row, k * cin, T(0));
              row += k * cin;
              continue;
            }
            if (ix0 >= 0 && ix0 + k <= g.in[2]) {
              // whole kernel row in bounds: the k taps are adjacent in channels-last memory
              const T* src = x + ((static_cast<std::size_t>(iz) * g.in[1] + iy) * g.in[2] + ix0) * cin;
              std::copy_n(src, k * cin, row);
              row += k * cin;
              continue;
            }
            for (int kx = 0; kx < k; ++kx, row += cin) {
              const int ix = ox * g.stride - g.pad + kx;
              if (yin && ix >= 0 && ix < g.in[2]) {
                const T* src = x + ((static_cast<std::size_t>(iz) * g.in[1] + iy) * g.in[2] + ix) * cin;
                std::memcpy(row, src, cin * sizeof(T));
              } else {
                std::fill(row, row + cin, T(0));
              }
            }
          }
        }
      }
    }
  }
}

// gather form of col2im: each input voxel sums the patch entries that read it, so threads
// never write the same location
template <class T>
void col2im(const ConvGeom& g, const T* cols, T* dx) {
  const auto o = g.out();
  const std::size_t patch = g.patch();
  const int k = g.k, s = g.stride;
  const std::size_t cin = static_cast<std::size_t>(g.cin);
#pragma omp parallel for schedule(static)
  for (int iz = 0; iz < g.in[0]; ++iz) {
    for (int iy = 0; iy < g.in[1]; ++iy) {
      for (int ix = 0; ix < g.in[2]; ++ix) {
        T* dst = dx + ((static_cast<std::size_t>(iz) * g.in[1] + iy) * g.in[2] + ix) * cin;
        std::fill(dst, dst + cin, T(0));
        for (int kz = 0; kz < k; ++kz) {
          const int tz = iz + g.pad - kz;
          if (tz < 0 || tz % s != 0 || tz / s >= o[0]) continue;
          for (int ky = 0; ky < k; ++ky) {
            const int ty = iy + g.pad - ky;
            if (ty < 0 || ty % s != 0 || ty / s >= o[1]) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int tx = ix + g.pad - kx;
              if (tx < 0 || tx % s != 0 || tx / s >= o[2]) continue;
              const std::size_t p = (static_cast<std::size_t>(tz / s) * o[1] + ty / s) * o[2] + tx / s;
              const T* src = cols + p * patch + ((static_cast<std::size_t>(kz) * k + ky) * k + kx) * cin;
              for (std::size_t c = 0; c < cin; ++c) dst[c] += src[c];
            }
          }
        }
      }
    }
  }
}

}  // namespace

template <class T>
void conv3d_forward(const ConvGeom& g, const T* x, const T* w, const T* b, T* y) {
  validate(g);
  const int P = static_cast<int>(g.out_positions());
  const int K = static_cast<int>(g.patch());
  const T* cols = x;
  if (!g.pointwise()) {
    auto& buf = workspace<T>();
    buf.resize(static_cast<std::size_t>(P) * K);
    im2col(g, x, buf.data());
    cols = buf.data();
  }
  T beta = T(0);
  if (b != nullptr) {
#pragma omp parallel for schedule(static)
    for (int p = 0; p < P; ++p) std::memcpy(y + static_cast<std::size_t>(p) * g.cout, b, g.cout * sizeof(T));
    beta = T(1);
  }
  gemm<T>(false, false, P, g.cout, K, T(1), cols, K, w, g.cout, beta, y, g.cout);
}

template <class T>
void conv3d_backward(const ConvGeom& g, const T* x, const T* w, const T* dy, T* dx, T* dw, T* db) {
  validate(g);
  const int P = static_cast<int>(g.out_positions());
  const int K = static_cast<int>(g.patch());
  if (db != nullptr) {
    // column sums of dy; split channels across threads to avoid reductions
#pragma omp parallel for schedule(static)
    for (int c = 0; c < g.cout; ++c) {
      T acc = T(0);
      for (int p = 0; p < P; ++p) acc += dy[static_cast<std::size_t>(p) * g.cout + c];
      db[c] += acc;
    }
  }
  auto& buf = workspace<T>();
  const T* cols = x;
  if (!g.pointwise()) {
    buf.resize(static_cast<std::size_t>(P) * K);
    im2col(g, x, buf.data());
    cols = buf.data();
  }
  gemm<T>(true, false, K, g.cout, P, T(1), cols, K, dy, g.cout, T(1), dw, g.cout);
  if (dx == nullptr) return;
  if (g.pointwise()) {
    gemm<T>(false, true, P, g.cin, g.cout, T(1), dy, g.cout, w, g.cout, T(0), dx, g.cin);
    return;
  }
  // the im2col buffer is no longer needed, reuse it for dcols
  gemm<T>(false, true, P, K, g.cout, T(1), dy, g.cout, w, g.cout, T(0), buf.data(), K);
  col2im(g, buf.data(), dx);
}

template void conv3d_forward<float>(const ConvGeom&, const float*, const float*, const float*, float*);
template void conv3d_forward<double>(const ConvGeom&, const double*, const double*, const double*, double*);
template void conv3d_backward<float>(const ConvGeom&, const float*, const float*, const float*, float*, float*,
                                     float*);
template void conv3d_backward<double>(const ConvGeom&, const double*, const double*, const double*, double*,
                                      double*, double*);

namespace reference {

template <class T>
void conv3d_forward(const ConvGeom& g, const T* x, const T* w, const T* b, T* y) {
  validate(g);
  const auto o = g.out();
  for (int oz = 0; oz < o[0]; ++oz)
    for (int oy = 0; oy < o[1]; ++oy)
      for (int ox = 0; ox < o[2]; ++ox)
        for (int co = 0; co < g.cout; ++co) {
          T acc = b != nullptr ? b[co] : T(0);
          for (int kz = 0; kz < g.k; ++kz)
            for (int ky = 0; ky < g.k; ++ky)
              for (int kx = 0; kx < g.k; ++kx) {
                const int iz = oz * g.stride - g.pad + kz;
                const int iy = oy * g.stride - g.pad + ky;
                const int ix = ox * g.stride - g.pad + kx;
                if (iz < 0 || iy < 0 || ix < 0 || iz >= g.in[0] || iy >= g.in[1] || ix >= g.in[2]) continue;
                for (int ci = 0; ci < g.cin; ++ci) {
                  const std::size_t xi = ((static_cast<std::size_t>(iz) * g.in[1] + iy) * g.in[2] + ix) * g.cin + ci;
                  const std::size_t wi =
                      ((((static_cast<std::size_t>(kz) * g.k + ky) * g.k + kx) * g.cin + ci) * g.cout) + co;
                  acc += x[xi] * w[wi];
                }
              }
          y[((static_cast<std::size_t>(oz) * o[1] + oy) * o[2] + ox) * g.cout + co] = acc;
        }
}

template <class T>
void conv3d_backward(const ConvGeom& g, const T* x, const T* w, const T* dy, T* dx, T* dw, T* db) {
  validate(g);
  const auto o = g.out();
  if (dx != nullptr) std::fill(dx, dx + g.in_positions() * g.cin, T(0));
  for (int oz = 0; oz < o[0]; ++oz)
    for (int oy = 0; oy < o[1]; ++oy)
      for (int ox = 0; ox < o[2]; ++ox)
        for (int co = 0; co < g.cout; ++co) {
          const T gy = dy[((static_cast<std::size_t>(oz) * o[1] + oy) * o[2] + ox) * g.cout + co];
          if (db != nullptr) db[co] += gy;
          for (int kz = 0; kz < g.k; ++kz)
            for (int ky = 0; ky < g.k; ++ky)
              for (int kx = 0; kx < g.k; ++kx) {
                const int iz = oz * g.stride - g.pad + kz;
                const int iy = oy * g.stride - g.pad + ky;
                const int ix = ox * g.stride - g.pad + kx;
                if (iz < 0 || iy < 0 || ix < 0 || iz >= g.in[0] || iy >= g.in[1] || ix >= g.in[2]) continue;
                for (int ci = 0; ci < g.cin; ++ci) {
                  const std::size_t xi = ((static_cast<std::size_t>(iz) * g.in[1] + iy) * g.in[2] + ix) * g.cin + ci;
                  const std::size_t wi =
                      ((((static_cast<std::size_t>(kz) * g.k + ky) * g.k + kx) * g.cin + ci) * g.cout) + co;
                  dw[wi] += x[xi] * gy;
                  if (dx != nullptr) dx[xi] += w[wi] * gy;
                }
              }
        }
}

template void conv3d_forward<float>(const ConvGeom&, const float*, const float*, const float*, float*);
template void conv3d_forward<double>(const ConvGeom&, const double*, const double*, const double*, double*);
template void conv3d_backward<float>(const ConvGeom&, const float*, const float*, const float*, float*, float*,
                                     float*);
template void conv3d_backward<double>(const ConvGeom&, const double*, const double*, const double*, double*,
                                      double*, double*);

}  // namespace reference

}  // namespace baggagedet::kernels
