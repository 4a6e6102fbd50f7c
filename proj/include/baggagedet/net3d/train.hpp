// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "baggagedet/augment/augment.hpp"
#include "baggagedet/net3d/checkpoint.hpp"
#include "baggagedet/net3d/loss.hpp"
#include "baggagedet/net3d/model.hpp"
#include "baggagedet/net3d/optim.hpp"
#include "baggagedet/volcore/manifest.hpp"

namespace baggagedet::net3d {

struct TrainConfig {
  std::vector<LrStage> schedule = default_schedule(20);
  int batch_size = 1;  // gradients are averaged over the batch before each Adam step
  LossConfig loss;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

struct Sample {
  Volume volume;
  std::vector<Annotation> annotations;
};

/// Network-ready sample: channel selection, resample by s, box rescale, zero pad to 32.
struct PreparedSample {
  Volume volume;
  std::vector<Annotation> annotations;
  Dims3 original_dims;
};

PreparedSample prepare_sample(const Volume& v, const std::vector<Annotation>& anns, const DetectorSpec& spec);

/// Channel-major volume to a channels-last tensor.
template <class T>
Tensor<T> to_tensor(const Volume& v);

/// Loads every volume of `role` in split `split` (1-based) together with its annotations.
std::vector<Sample> load_split(const Manifest& manifest, SplitRole role, int split);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double lr = 0.0;
  double cls_loss = 0.0;
  double reg_loss = 0.0;
  double total = 0.0;
};

/// One line per epoch: `epoch,lr,cls_loss,reg_loss,total`.
std::string format_log_line(const EpochRecord& r);
EpochRecord parse_log_line(const std::string& line);

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::string to_text() const;
};

class NonFiniteLossError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainOptions {
  /// When set, the train log is appended to <out>/train_log.csv after every epoch and
  /// checkpoints <out>/stage<k>.bdck are written at stage boundaries.
  std::filesystem::path out_dir;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  DetectorSpec spec;
  Model<float> model;
  Adam optimizer;
  TrainLog log;
};

/// Epoch loop: shuffle, augment (per-sample stream), match, forward, loss, backward, Adam.
/// The model is initialised from cfg.seed; results depend only on the inputs and seeds.
TrainResult train(const std::vector<Sample>& samples, const DetectorSpec& spec, const TrainConfig& cfg,
                  const augment::AugmentConfig& aug, const TrainOptions& opts = {});

}  // namespace baggagedet::net3d
