// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "baggagedet/evalkit/detect.hpp"
#include "baggagedet/volcore/box.hpp"
#include "baggagedet/volcore/volume.hpp"

namespace baggagedet::app {

using Rgb = std::array<std::uint8_t, 3>;

/// bottle blue, handgun red, binocular magenta, glockframe yellow, ipod black.
Rgb class_color(int class_id);

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Rgb pixel(int x, int y) const;
  void set(int x, int y, const Rgb& c);
};

/// Binary PPM (P6).
std::string encode_ppm(const Image& img);

/// Mid-slice perpendicular to `axis` (0 = z, 1 = y, 2 = x) of channel 0 as grey levels over the
/// volume's min..max range, magnified by `zoom`, with every box projected onto the slice plane
/// as a rectangle outline. Ground truth is drawn solid, detections dashed.
Image render_slice(const Volume& v, int axis, const std::vector<Annotation>& gts,
                   const std::vector<evalkit::Detection>& dets, int zoom = 4);

/// Writes <out>/<stem>_{z,y,x}.ppm; returns the paths.
std::vector<std::filesystem::path> render_volume(const Volume& v, const std::vector<Annotation>& gts,
                                                 const std::vector<evalkit::Detection>& dets,
                                                 const std::filesystem::path& out_dir, const std::string& stem,
                                                 int zoom = 4);

}  // namespace baggagedet::app
