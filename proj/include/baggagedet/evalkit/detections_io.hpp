// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "baggagedet/evalkit/metrics.hpp"

namespace baggagedet::evalkit {

// Text format: header line "# baggagedet detections v1", then one record per line
// "volume_id,class_id,score,z0,y0,x0,z1,y1,x1" with round-trip precision. Volume ids must not
// contain commas. Volumes listed in "# volume <id>" lines exist even when they have no records.
std::string format_detections(const DetectionsByVolume& dets);
DetectionsByVolume parse_detections(const std::string& text);

void write_detections(const DetectionsByVolume& dets, const std::filesystem::path& path);
DetectionsByVolume read_detections(const std::filesystem::path& path);

}  // namespace baggagedet::evalkit
