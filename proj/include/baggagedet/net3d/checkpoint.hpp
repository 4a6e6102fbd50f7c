// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "baggagedet/anchors/anchors.hpp"
#include "baggagedet/net3d/model.hpp"
#include "baggagedet/net3d/optim.hpp"
#include "baggagedet/volcore/resample.hpp"
#include "baggagedet/volcore/volume.hpp"

namespace baggagedet::net3d {

/// Everything needed to rebuild a detector from a checkpoint.
struct DetectorSpec {
  ModelConfig model;
  anchors::AnchorConfig anchors;
  ScaleConfig scale;
  ChannelMode channels = ChannelMode::Low;
  double match_iou = anchors::kDefaultMatchIou;
};

std::string to_json(const DetectorSpec& spec);
DetectorSpec detector_spec_from_json(const std::string& text);

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  DetectorSpec spec;
  int epoch = 0;  // completed epochs
  Model<float> model;
  std::optional<Adam> optimizer;
};

/// Versioned binary: magic "BDCK", version, arch JSON, epoch, Adam step, then per parameter
/// its name, shape, values and (optionally) Adam moments.
void save_checkpoint(const std::filesystem::path& path, const DetectorSpec& spec, int epoch, Model<float>& model,
                     const Adam* optimizer);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace baggagedet::net3d
