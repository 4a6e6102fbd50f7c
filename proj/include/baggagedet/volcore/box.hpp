// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "baggagedet/volcore/volume.hpp"

namespace baggagedet {

/// Axis-aligned box in voxel coordinates, half-open per axis:
/// voxel v is inside iff lo[a] <= v[a] < hi[a]. Axis order is (z, y, x).
struct Box3D {
  std::array<double, 3> lo{};
  std::array<double, 3> hi{};

  Box3D() = default;
  Box3D(double z0, double y0, double x0, double z1, double y1, double x1) : lo{z0, y0, x0}, hi{z1, y1, x1} {}

  double z0() const { return lo[0]; }
  double y0() const { return lo[1]; }
  double x0() const { return lo[2]; }
  double z1() const { return hi[0]; }
  double y1() const { return hi[1]; }
  double x1() const { return hi[2]; }

  double extent(int axis) const { return hi[axis] - lo[axis]; }
  double center(int axis) const { return 0.5 * (lo[axis] + hi[axis]); }
  double volume() const { return extent(0) * extent(1) * extent(2); }

  std::array<double, 6> as_array() const { return {lo[0], lo[1], lo[2], hi[0], hi[1], hi[2]}; }

  friend bool operator==(const Box3D&, const Box3D&) = default;
};

/// Finite coordinates and hi > lo on every axis.
bool is_valid(const Box3D& b);

/// Throws std::invalid_argument if the box violates its invariants.
Box3D checked_box(double z0, double y0, double x0, double z1, double y1, double x1);

/// Intersection-over-union of the continuous box volumes. Equals the voxel-count IoU for
/// integer boxes.
double iou3d(const Box3D& a, const Box3D& b);

double intersection_volume(const Box3D& a, const Box3D& b);

/// Clips to [0, dims) per axis. The result may be degenerate if the box lies outside.
Box3D clip_to(const Box3D& b, const Dims3& dims);

inline constexpr int kDefaultNumClasses = 5;
inline constexpr std::array<std::string_view, kDefaultNumClasses> kClassNames = {
    "bottle", "handgun", "binocular", "glockframe", "ipod"};

/// Name for a class id; ids outside the default table map to "class<N>".
std::string class_name(int class_id);
/// Inverse of class_name; returns -1 for unknown names.
int class_id_from_name(std::string_view name);

struct Annotation {
  Box3D box;
  int class_id = 0;
  int instance_id = 0;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

std::vector<Box3D> boxes_of(const std::vector<Annotation>& anns);

}  // namespace baggagedet
