// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/app/render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "baggagedet/volcore/bvox.hpp"

namespace baggagedet::app {

Rgb class_color(int class_id) {
  switch (class_id) {
    case 0: return {0, 0, 255};
    case 1: return {255, 0, 0};
    case 2: return {255, 0, 255};
    case 3: return {255, 255, 0};
    case 4: return {0, 0, 0};
    default: return {0, 255, 0};
  }
}

Rgb Image::pixel(int x, int y) const {
  const auto* p = &rgb[(static_cast<std::size_t>(y) * width + x) * 3];
  return {p[0], p[1], p[2]};
}

void Image::set(int x, int y, const Rgb& c) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  auto* p = &rgb[(static_cast<std::size_t>(y) * width + x) * 3];
  p[0] = c[0];
  p[1] = c[1];
  p[2] = c[2];
}

std::string encode_ppm(const Image& img) {
  std::string s = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  s.append(reinterpret_cast<const char*>(img.rgb.data()), img.rgb.size());
  return s;
}

namespace {

// in-plane axes for a slice perpendicular to `axis`: (row axis, column axis)
std::pair<int, int> plane_axes(int axis) {
  switch (axis) {
    case 0: return {1, 2};
    case 1: return {0, 2};
    case 2: return {0, 1};
    default: throw std::invalid_argument("render axis must be 0, 1 or 2");
  }
}

void draw_rect(Image& img, const Box3D& b, int ra, int ca, int zoom, const Rgb& color, bool dashed) {
  const int x0 = static_cast<int>(std::floor(b.lo[ca] * zoom));
  const int x1 = static_cast<int>(std::ceil(b.hi[ca] * zoom)) - 1;
  const int y0 = static_cast<int>(std::floor(b.lo[ra] * zoom));
  const int y1 = static_cast<int>(std::ceil(b.hi[ra] * zoom)) - 1;
  auto on = [&](int t) { return !dashed || (t / 3) % 2 == 0; };
  for (int x = x0; x <= x1; ++x)
    if (on(x - x0)) {
      img.set(x, y0, color);
      img.set(x, y1, color);
    }
  for (int y = y0; y <= y1; ++y)
    if (on(y - y0)) {
      img.set(x0, y, color);
      img.set(x1, y, color);
    }
}

}  // namespace

Image render_slice(const Volume& v, int axis, const std::vector<Annotation>& gts,
                   const std::vector<evalkit::Detection>& dets, int zoom) {
  if (zoom < 1) throw std::invalid_argument("render zoom must be >= 1");
  const auto [ra, ca] = plane_axes(axis);
  const auto& d = v.dims();
  const int mid = d[axis] / 2;
  const auto ch0 = v.channel(0);
  const auto [mn, mx] = std::minmax_element(ch0.begin(), ch0.end());
  const float lo = *mn, range = std::max(*mx - *mn, 1e-12f);

  Image img;
  img.width = d[ca] * zoom;
  img.height = d[ra] * zoom;
  img.rgb.assign(static_cast<std::size_t>(img.width) * img.height * 3, 0);
  for (int r = 0; r < d[ra]; ++r)
    for (int c = 0; c < d[ca]; ++c) {
      int idx[3];
      idx[axis] = mid;
      idx[ra] = r;
      idx[ca] = c;
      const float val = v.at(0, idx[0], idx[1], idx[2]);
      const auto g = static_cast<std::uint8_t>(std::lround(255.0f * std::clamp((val - lo) / range, 0.0f, 1.0f)));
      for (int dy = 0; dy < zoom; ++dy)
        for (int dx = 0; dx < zoom; ++dx) img.set(c * zoom + dx, r * zoom + dy, {g, g, g});
    }
  for (const auto& a : gts) draw_rect(img, a.box, ra, ca, zoom, class_color(a.class_id), false);
  for (const auto& det : dets) draw_rect(img, det.box, ra, ca, zoom, class_color(det.class_id), true);
  return img;
}

std::vector<std::filesystem::path> render_volume(const Volume& v, const std::vector<Annotation>& gts,
                                                 const std::vector<evalkit::Detection>& dets,
                                                 const std::filesystem::path& out_dir, const std::string& stem,
                                                 int zoom) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> paths;
  const char names[3] = {'z', 'y', 'x'};
  for (int axis = 0; axis < 3; ++axis) {
    const auto path = out_dir / (stem + "_" + names[axis] + ".ppm");
    write_text_file(path, encode_ppm(render_slice(v, axis, gts, dets, zoom)));
    paths.push_back(path);
  }
  return paths;
}

}  // namespace baggagedet::app
