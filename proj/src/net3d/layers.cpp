// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/net3d/layers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace baggagedet::net3d {

template <class T>
Conv3d<T>::Conv3d(const std::string& name, int cin, int cout, int k, int stride, int pad, bool bias)
    : weight(name + ".weight", {k, k, k, cin, cout}), has_bias(bias), cin_(cin), cout_(cout), k_(k), stride_(stride),
      pad_(pad) {
  if (bias) this->bias = Param<T>(name + ".bias", {cout});
}

template <class T>
kernels::ConvGeom Conv3d<T>::geom(const std::array<int, 3>& in) const {
  kernels::ConvGeom g;
  g.in = in;
  g.cin = cin_;
  g.cout = cout_;
  g.k = k_;
  g.stride = stride_;
  g.pad = pad_;
  return g;
}

template <class T>
Tensor<T> Conv3d<T>::forward(const Tensor<T>& x) const {
  if (x.c != cin_)
    throw std::invalid_argument(weight.name + ": expected " + std::to_string(cin_) + " input channels, got " +
                                std::to_string(x.c));
  const auto g = geom(x.dims);
  Tensor<T> y(g.out(), cout_);
  kernels::conv3d_forward<T>(g, x.ptr(), weight.value.data(), has_bias ? bias.value.data() : nullptr, y.ptr());
  return y;
}

template <class T>
Tensor<T> Conv3d<T>::backward(const Tensor<T>& x, const Tensor<T>& dy, bool need_dx) {
  const auto g = geom(x.dims);
  Tensor<T> dx;
  if (need_dx) dx = Tensor<T>(x.dims, cin_);
  kernels::conv3d_backward<T>(g, x.ptr(), weight.value.data(), dy.ptr(), need_dx ? dx.ptr() : nullptr,
                              weight.grad.data(), has_bias ? bias.grad.data() : nullptr);
  return dx;
}

template <class T>
void Conv3d<T>::init_he(Rng& rng) {
  init_normal(rng, std::sqrt(2.0 / (static_cast<double>(k_) * k_ * k_ * cin_)));
}

template <class T>
void Conv3d<T>::init_normal(Rng& rng, double std) {
  for (auto& w : weight.value) w = static_cast<T>(std * normal01(rng));
  if (has_bias) std::fill(bias.value.begin(), bias.value.end(), T(0));
}

template <class T>
void Conv3d<T>::collect(std::vector<Param<T>*>& out) {
  out.push_back(&weight);
  if (has_bias) out.push_back(&bias);
}

int group_count(int channels, int max_groups) {
  for (int g = std::min(channels, std::max(1, max_groups)); g > 1; --g)
    if (channels % g == 0) return g;
  return 1;
}

template <class T>
GroupNorm<T>::GroupNorm(const std::string& name, int channels, int groups, double eps)
    : gamma(name + ".gamma", {channels}), beta(name + ".beta", {channels}), channels_(channels),
      groups_(group_count(channels, groups)), eps_(eps) {
  std::fill(gamma.value.begin(), gamma.value.end(), T(1));
}

template <class T>
void GroupNorm<T>::stats(const Tensor<T>& x, std::vector<double>& mean, std::vector<double>& rstd) const {
  const int cpg = channels_ / groups_;
  const std::size_t n = x.positions();
  std::vector<double> sum(channels_, 0.0), sq(channels_, 0.0);
  const T* p = x.ptr();
  for (std::size_t i = 0; i < n; ++i, p += channels_)
    for (int ch = 0; ch < channels_; ++ch) {
      const double v = p[ch];
      sum[ch] += v;
      sq[ch] += v * v;
    }
  mean.assign(groups_, 0.0);
  rstd.assign(groups_, 0.0);
  const double count = static_cast<double>(n) * cpg;
  for (int g = 0; g < groups_; ++g) {
    double s = 0, q = 0;
    for (int ch = g * cpg; ch < (g + 1) * cpg; ++ch) {
      s += sum[ch];
      q += sq[ch];
    }
    const double m = s / count;
    const double var = std::max(0.0, q / count - m * m);
    mean[g] = m;
    rstd[g] = 1.0 / std::sqrt(var + eps_);
  }
}

template <class T>
Tensor<T> GroupNorm<T>::forward(const Tensor<T>& x) const {
  if (x.c != channels_) throw std::invalid_argument(gamma.name + ": channel mismatch");
  std::vector<double> mean, rstd;
  stats(x, mean, rstd);
  const int cpg = channels_ / groups_;
  std::vector<T> scale(channels_), shift(channels_);
  for (int ch = 0; ch < channels_; ++ch) {
    const int g = ch / cpg;
    scale[ch] = static_cast<T>(gamma.value[ch] * rstd[g]);
    shift[ch] = static_cast<T>(beta.value[ch] - gamma.value[ch] * rstd[g] * mean[g]);
  }
  Tensor<T> y(x.dims, channels_);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.positions());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const T* src = x.ptr() + i * channels_;
    T* dst = y.ptr() + i * channels_;
    for (int ch = 0; ch < channels_; ++ch) dst[ch] = src[ch] * scale[ch] + shift[ch];
  }
  return y;
}

template <class T>
Tensor<T> GroupNorm<T>::backward(const Tensor<T>& x, const Tensor<T>& dy) {
  std::vector<double> mean, rstd;
  stats(x, mean, rstd);
  const int cpg = channels_ / groups_;
  const std::size_t n = x.positions();
  // per-channel sums of dy and dy*xhat
  std::vector<double> sdy(channels_, 0.0), sdyx(channels_, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const T* xp = x.ptr() + i * channels_;
    const T* dp = dy.ptr() + i * channels_;
    for (int ch = 0; ch < channels_; ++ch) {
      const int g = ch / cpg;
      const double xhat = (xp[ch] - mean[g]) * rstd[g];
      sdy[ch] += dp[ch];
      sdyx[ch] += dp[ch] * xhat;
    }
  }
  std::vector<double> g_mean(groups_, 0.0), g_meanx(groups_, 0.0);
  const double count = static_cast<double>(n) * cpg;
  for (int ch = 0; ch < channels_; ++ch) {
    beta.grad[ch] += static_cast<T>(sdy[ch]);
    gamma.grad[ch] += static_cast<T>(sdyx[ch]);
    const int g = ch / cpg;
    g_mean[g] += gamma.value[ch] * sdy[ch] / count;
    g_meanx[g] += gamma.value[ch] * sdyx[ch] / count;
  }
  Tensor<T> dx(x.dims, channels_);
  const std::ptrdiff_t np = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < np; ++i) {
    const T* xp = x.ptr() + i * channels_;
    const T* dp = dy.ptr() + i * channels_;
    T* out = dx.ptr() + i * channels_;
    for (int ch = 0; ch < channels_; ++ch) {
      const int g = ch / cpg;
      const double xhat = (xp[ch] - mean[g]) * rstd[g];
      out[ch] = static_cast<T>(rstd[g] * (gamma.value[ch] * dp[ch] - g_mean[g] - xhat * g_meanx[g]));
    }
  }
  return dx;
}

template <class T>
void GroupNorm<T>::collect(std::vector<Param<T>*>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

namespace {
thread_local KinkTrace* g_trace = nullptr;
}

void KinkTrace::mix(std::uint64_t v) { digest = mix64(digest ^ mix64(v)); }
void set_kink_trace(KinkTrace* trace) { g_trace = trace; }
KinkTrace* kink_trace() { return g_trace; }

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y = x;
  relu_inplace(y);
  return y;
}

template <class T>
void relu_inplace(Tensor<T>& x) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
  T* p = x.ptr();
  if (KinkTrace* tr = g_trace) {
    std::uint64_t word = 0;
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      word = (word << 1) | (p[i] > T(0) ? 1u : 0u);
      if (i % 64 == 63 || i + 1 == n) {
        tr->mix(word);
        word = 0;
      }
    }
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) p[i] = p[i] > T(0) ? p[i] : T(0);
}

template <class T>
Tensor<T> relu_backward(const Tensor<T>& y, const Tensor<T>& dy) {
  Tensor<T> dx(y.dims, y.c);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(y.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) dx.data[i] = y.data[i] > T(0) ? dy.data[i] : T(0);
  return dx;
}

namespace {

std::array<int, 3> pooled_dims(const std::array<int, 3>& in) {
  std::array<int, 3> o{};
  for (int a = 0; a < 3; ++a) o[a] = (in[a] + 2 - 3) / 2 + 1;
  return o;
}

// flat input position of the max tap for output (oz,oy,ox), channel ch
template <class T>
std::size_t argmax_tap(const Tensor<T>& x, int oz, int oy, int ox, int ch) {
  T best = -std::numeric_limits<T>::infinity();
  std::size_t arg = 0;
  for (int kz = 0; kz < 3; ++kz) {
    const int iz = 2 * oz - 1 + kz;
    if (iz < 0 || iz >= x.dims[0]) continue;
    for (int ky = 0; ky < 3; ++ky) {
      const int iy = 2 * oy - 1 + ky;
      if (iy < 0 || iy >= x.dims[1]) continue;
      for (int kx = 0; kx < 3; ++kx) {
        const int ix = 2 * ox - 1 + kx;
        if (ix < 0 || ix >= x.dims[2]) continue;
        const std::size_t pos = ((static_cast<std::size_t>(iz) * x.dims[1] + iy) * x.dims[2] + ix) * x.c + ch;
        if (x.data[pos] > best) {
          best = x.data[pos];
          arg = pos;
        }
      }
    }
  }
  return arg;
}

}  // namespace

template <class T>
Tensor<T> maxpool3(const Tensor<T>& x) {
  Tensor<T> y(pooled_dims(x.dims), x.c);
#pragma omp parallel for schedule(static)
  for (int oz = 0; oz < y.dims[0]; ++oz)
    for (int oy = 0; oy < y.dims[1]; ++oy)
      for (int ox = 0; ox < y.dims[2]; ++ox)
        for (int ch = 0; ch < x.c; ++ch) y.at(oz, oy, ox, ch) = x.data[argmax_tap(x, oz, oy, ox, ch)];
  if (KinkTrace* tr = g_trace) {
    for (int oz = 0; oz < y.dims[0]; ++oz)
      for (int oy = 0; oy < y.dims[1]; ++oy)
        for (int ox = 0; ox < y.dims[2]; ++ox)
          for (int ch = 0; ch < x.c; ++ch) tr->mix(argmax_tap(x, oz, oy, ox, ch));
  }
  return y;
}

template <class T>
Tensor<T> maxpool3_backward(const Tensor<T>& x, const Tensor<T>& dy) {
  // windows overlap; each thread owns whole channels so the scatter never collides
  Tensor<T> dx(x.dims, x.c);
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < x.c; ++ch)
    for (int oz = 0; oz < dy.dims[0]; ++oz)
      for (int oy = 0; oy < dy.dims[1]; ++oy)
        for (int ox = 0; ox < dy.dims[2]; ++ox) dx.data[argmax_tap(x, oz, oy, ox, ch)] += dy.at(oz, oy, ox, ch);
  return dx;
}

template <class T>
Tensor<T> upsample2(const Tensor<T>& x) {
  Tensor<T> y({x.dims[0] * 2, x.dims[1] * 2, x.dims[2] * 2}, x.c);
#pragma omp parallel for schedule(static)
  for (int z = 0; z < y.dims[0]; ++z)
    for (int yy = 0; yy < y.dims[1]; ++yy)
      for (int xx = 0; xx < y.dims[2]; ++xx) {
        const T* src = x.ptr() + ((static_cast<std::size_t>(z / 2) * x.dims[1] + yy / 2) * x.dims[2] + xx / 2) * x.c;
        T* dst = y.ptr() + ((static_cast<std::size_t>(z) * y.dims[1] + yy) * y.dims[2] + xx) * x.c;
        std::copy(src, src + x.c, dst);
      }
  return y;
}

template <class T>
Tensor<T> upsample2_backward(const Tensor<T>& dy) {
  Tensor<T> dx({dy.dims[0] / 2, dy.dims[1] / 2, dy.dims[2] / 2}, dy.c);
#pragma omp parallel for schedule(static)
  for (int z = 0; z < dx.dims[0]; ++z)
    for (int y = 0; y < dx.dims[1]; ++y)
      for (int x = 0; x < dx.dims[2]; ++x)
        for (int ch = 0; ch < dy.c; ++ch) {
          T acc = T(0);
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
              for (int d = 0; d < 2; ++d) acc += dy.at(2 * z + a, 2 * y + b, 2 * x + d, ch);
          dx.at(z, y, x, ch) = acc;
        }
  return dx;
}

template <class T>
void add_inplace(Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("tensor shape mismatch in add");
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(a.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) a.data[i] += b.data[i];
}

#define BAGGAGEDET_INSTANTIATE(T)                                            \
  template class Conv3d<T>;                                                  \
  template class GroupNorm<T>;                                               \
  template Tensor<T> relu<T>(const Tensor<T>&);                              \
  template void relu_inplace<T>(Tensor<T>&);                                 \
  template Tensor<T> relu_backward<T>(const Tensor<T>&, const Tensor<T>&);   \
  template Tensor<T> maxpool3<T>(const Tensor<T>&);                          \
  template Tensor<T> maxpool3_backward<T>(const Tensor<T>&, const Tensor<T>&); \
  template Tensor<T> upsample2<T>(const Tensor<T>&);                         \
  template Tensor<T> upsample2_backward<T>(const Tensor<T>&);                \
  template void add_inplace<T>(Tensor<T>&, const Tensor<T>&);

BAGGAGEDET_INSTANTIATE(float)
BAGGAGEDET_INSTANTIATE(double)

}  // namespace baggagedet::net3d
