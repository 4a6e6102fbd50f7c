// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/volcore/resample.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace baggagedet {

void validate(const ScaleConfig& cfg) {
  if (cfg.s < 1 || cfg.s > 4) {
    throw std::invalid_argument("scale factor s must be in 1..4, got " + std::to_string(cfg.s));
  }
}

Dims3 scaled_dims(const Dims3& dims, int s) {
  return {(dims.d + s - 1) / s, (dims.h + s - 1) / s, (dims.w + s - 1) / s};
}

Volume resample(const Volume& v, const ScaleConfig& cfg) {
  validate(cfg);
  const int s = cfg.s;
  if (s == 1) return v;
  const Dims3 in = v.dims();
  const Dims3 out = scaled_dims(in, s);
  Volume result(out, v.channels(), v.meta);
  for (int c = 0; c < v.channels(); ++c) {
    const auto src = v.channel(c);
    auto dst = result.channel(c);
#pragma omp parallel for schedule(static)
    for (int oz = 0; oz < out.d; ++oz) {
      const int z0 = oz * s, z1 = std::min(in.d, z0 + s);
      for (int oy = 0; oy < out.h; ++oy) {
        const int y0 = oy * s, y1 = std::min(in.h, y0 + s);
        for (int ox = 0; ox < out.w; ++ox) {
          const int x0 = ox * s, x1 = std::min(in.w, x0 + s);
          double sum = 0.0;
          for (int z = z0; z < z1; ++z)
            for (int y = y0; y < y1; ++y)
              for (int x = x0; x < x1; ++x) sum += src[v.index(z, y, x)];
          const double n = static_cast<double>((z1 - z0) * (y1 - y0) * (x1 - x0));
          dst[result.index(oz, oy, ox)] = static_cast<float>(sum / n);
        }
      }
    }
  }
  return result;
}

std::vector<Box3D> rescale_boxes(const std::vector<Box3D>& boxes, const ScaleConfig& cfg, const Dims3& out_dims) {
  validate(cfg);
  const double s = cfg.s;
  std::vector<Box3D> out;
  out.reserve(boxes.size());
  for (const auto& b : boxes) {
    Box3D r;
    for (int a = 0; a < 3; ++a) {
      const double extent = out_dims[a];
      double lo = std::clamp(b.lo[a] / s, 0.0, extent);
      double hi = std::clamp(b.hi[a] / s, 0.0, extent);
      if (hi - lo < 1.0) {
        // grow to one voxel around the center, then shift back inside the extent
        const double c = std::clamp(0.5 * (lo + hi), 0.5, extent - 0.5);
        lo = c - 0.5;
        hi = c + 0.5;
      }
      r.lo[a] = lo;
      r.hi[a] = hi;
    }
    out.push_back(r);
  }
  return out;
}

Dims3 padded_dims(const Dims3& dims, int m) {
  if (m < 1) throw std::invalid_argument("padding multiple must be >= 1");
  auto up = [m](int v) { return (v + m - 1) / m * m; };
  return {up(dims.d), up(dims.h), up(dims.w)};
}

PaddedVolume pad_to_multiple(const Volume& v, int m) {
  const Dims3 out = padded_dims(v.dims(), m);
  if (out == v.dims()) return {v, {0, 0, 0}};
  Volume result(out, v.channels(), v.meta);
  const Dims3 in = v.dims();
  for (int c = 0; c < v.channels(); ++c) {
    const auto src = v.channel(c);
    auto dst = result.channel(c);
#pragma omp parallel for schedule(static)
    for (int z = 0; z < in.d; ++z) {
      for (int y = 0; y < in.h; ++y) {
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(v.index(z, y, 0)), in.w,
                    dst.begin() + static_cast<std::ptrdiff_t>(result.index(z, y, 0)));
      }
    }
  }
  return {std::move(result), {0, 0, 0}};
}

}  // namespace baggagedet
