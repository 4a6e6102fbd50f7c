// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "baggagedet/augment/augment.hpp"
#include "baggagedet/evalkit/detect.hpp"
#include "baggagedet/net3d/checkpoint.hpp"
#include "baggagedet/net3d/train.hpp"
#include "baggagedet/synthtip/dataset.hpp"

namespace baggagedet::app {

/// Invalid configuration; `key` names the offending setting.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what) : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct SynthConfig {
  int count = 200;
  synth::DatasetSpec dataset;
};

struct SplitConfig {
  double ratio = 0.7;
  int count = 3;
};

/// Everything a run needs. Defaults follow the best reported setting (s = 3, anchors
/// 8-16-32-64, p = 0.2 for both transform kinds) with the desk-scale depth-10 backbone.
struct ExperimentConfig {
  net3d::DetectorSpec detector;
  augment::AugmentConfig aug;
  net3d::TrainConfig train;
  evalkit::EvalConfig eval;
  SynthConfig synth;
  SplitConfig split_cfg;
  std::filesystem::path manifest;
  std::filesystem::path out = "out";
  int split = 1;
  std::uint64_t seed = 0;
};

ExperimentConfig default_experiment_config();

/// Flat `key=value` lines; '#' starts a comment, blank lines are skipped. Later keys win.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text);

/// Applies one setting. Throws ConfigError naming `key` for unknown keys or bad values.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Cross-field validation of the merged config (every sub-config valid). Throws ConfigError.
void validate(const ExperimentConfig& cfg);

/// Every key with its effective value, one `key=value` per line, in a fixed order. Feeding the
/// output back through parse_key_values/apply_setting reproduces the config.
std::string to_text(const ExperimentConfig& cfg);

/// Seeds derived from the experiment seed and split index, so that each split of an ablation
/// trains from its own initialisation and augmentation stream.
std::uint64_t train_seed(const ExperimentConfig& cfg);

}  // namespace baggagedet::app
