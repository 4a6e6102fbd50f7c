// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "baggagedet/app/config.hpp"
#include "baggagedet/evalkit/metrics.hpp"
#include "baggagedet/net3d/train.hpp"
#include "baggagedet/volcore/manifest.hpp"

namespace baggagedet::app {

// Building blocks shared by the subcommands and the sweeps. Every step reads its inputs from
// `cfg` and writes under cfg.out, so a sweep cell equals the same commands run by hand.

/// Writes cfg.synth.count volumes (seeded by cfg.seed) and an unassigned manifest into cfg.out.
Manifest run_synth(const ExperimentConfig& cfg);

/// Assigns the volumes of cfg.manifest to cfg.split_cfg.count random train/test splits and
/// writes <cfg.out>/manifest.txt. Volume paths are rewritten relative to cfg.out.
Manifest run_split(const ExperimentConfig& cfg);

/// Trains on the train role of split cfg.split. Writes <out>/train_log.csv (replaced, not
/// appended to, on rerun), per-stage checkpoints, <out>/model.bdck and <out>/config.txt.
net3d::TrainResult run_train(const ExperimentConfig& cfg);

/// Runs the detector on the test role of split cfg.split; volume ids are manifest entries.
evalkit::DetectionsByVolume run_detect(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint);

/// Ground truth of the test role of split cfg.split, keyed like run_detect's output.
evalkit::GroundTruthByVolume load_ground_truth(const ExperimentConfig& cfg);

/// Evaluates and writes <out>/metrics.csv and <out>/metrics.txt.
evalkit::Metrics run_eval(const ExperimentConfig& cfg, const evalkit::DetectionsByVolume& dets);

/// Train, detect (<out>/detections.txt), eval, all in cfg.out.
evalkit::Metrics run_pipeline(const ExperimentConfig& cfg);

/// Per-class metrics table of one evaluation (single split), both renderings.
std::string metrics_csv(const evalkit::Metrics& m);
std::string metrics_text(const evalkit::Metrics& m);

}  // namespace baggagedet::app
