// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/volcore/box.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace baggagedet {

bool is_valid(const Box3D& b) {
  for (int a = 0; a < 3; ++a) {
    if (!std::isfinite(b.lo[a]) || !std::isfinite(b.hi[a])) return false;
    if (!(b.hi[a] > b.lo[a])) return false;
  }
  return true;
}

Box3D checked_box(double z0, double y0, double x0, double z1, double y1, double x1) {
  Box3D b(z0, y0, x0, z1, y1, x1);
  if (!is_valid(b)) throw std::invalid_argument("invalid box: requires finite coordinates and hi > lo per axis");
  return b;
}

double intersection_volume(const Box3D& a, const Box3D& b) {
  double v = 1.0;
  for (int ax = 0; ax < 3; ++ax) {
    const double len = std::min(a.hi[ax], b.hi[ax]) - std::max(a.lo[ax], b.lo[ax]);
    if (len <= 0.0) return 0.0;
    v *= len;
  }
  return v;
}

double iou3d(const Box3D& a, const Box3D& b) {
  const double inter = intersection_volume(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.volume() + b.volume() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

Box3D clip_to(const Box3D& b, const Dims3& dims) {
  Box3D out = b;
  for (int a = 0; a < 3; ++a) {
    out.lo[a] = std::clamp(b.lo[a], 0.0, static_cast<double>(dims[a]));
    out.hi[a] = std::clamp(b.hi[a], 0.0, static_cast<double>(dims[a]));
  }
  return out;
}

std::string class_name(int class_id) {
  if (class_id >= 0 && class_id < kDefaultNumClasses) return std::string(kClassNames[class_id]);
  return "class" + std::to_string(class_id);
}

int class_id_from_name(std::string_view name) {
  for (int i = 0; i < kDefaultNumClasses; ++i) {
    if (kClassNames[i] == name) return i;
  }
  if (name.starts_with("class")) {
    try {
      return std::stoi(std::string(name.substr(5)));
    } catch (const std::exception&) {
      return -1;
    }
  }
  return -1;
}

std::vector<Box3D> boxes_of(const std::vector<Annotation>& anns) {
  std::vector<Box3D> out;
  out.reserve(anns.size());
  for (const auto& a : anns) out.push_back(a.box);
  return out;
}

}  // namespace baggagedet
