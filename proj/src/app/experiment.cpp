// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/app/experiment.hpp"

#include <filesystem>
#include <stdexcept>

#include "baggagedet/evalkit/detections_io.hpp"
#include "baggagedet/synthtip/dataset.hpp"
#include "baggagedet/volcore/bvox.hpp"

namespace baggagedet::app {

namespace fs = std::filesystem;

namespace {

Manifest require_manifest(const ExperimentConfig& cfg) {
  if (cfg.manifest.empty()) throw ConfigError("manifest", "manifest: no dataset manifest given");
  return read_manifest(cfg.manifest);
}

net3d::DetectorSpec detector_spec(const ExperimentConfig& cfg) {
  net3d::DetectorSpec spec = cfg.detector;
  spec.model.in_channels = channel_count(spec.channels);
  spec.model.num_anchors = spec.anchors.num_anchors_per_location();
  spec.model.levels = spec.anchors.levels;
  return spec;
}

}  // namespace

Manifest run_synth(const ExperimentConfig& cfg) {
  synth::DatasetSpec ds = cfg.synth.dataset;
  ds.base.seed = cfg.seed;
  return synth::write_dataset(ds, cfg.synth.count, cfg.out);
}

Manifest run_split(const ExperimentConfig& cfg) {
  const Manifest src = require_manifest(cfg);
  fs::create_directories(cfg.out);
  const fs::path out_abs = fs::absolute(cfg.out);
  std::vector<std::string> vols;
  for (const auto& v : src.volumes()) vols.push_back(fs::absolute(src.resolve(v)).lexically_relative(out_abs).generic_string());
  Manifest m = make_splits(vols, cfg.split_cfg.ratio, cfg.split_cfg.count, cfg.seed, cfg.out);
  write_manifest(m, cfg.out / "manifest.txt");
  return m;
}

net3d::TrainResult run_train(const ExperimentConfig& cfg) {
  const Manifest manifest = require_manifest(cfg);
  const auto samples = net3d::load_split(manifest, SplitRole::Train, cfg.split);
  if (samples.empty())
    throw std::runtime_error("split " + std::to_string(cfg.split) + " has no training volumes in " + cfg.manifest.string());
  fs::create_directories(cfg.out);
  fs::remove(cfg.out / "train_log.csv");
  write_text_file(cfg.out / "config.txt", to_text(cfg));

  net3d::TrainConfig tc = cfg.train;
  tc.seed = train_seed(cfg);
  augment::AugmentConfig aug = cfg.aug;
  aug.seed = tc.seed;
  net3d::TrainOptions opts;
  opts.out_dir = cfg.out;
  auto result = net3d::train(samples, detector_spec(cfg), tc, aug, opts);
  net3d::save_checkpoint(cfg.out / "model.bdck", result.spec, net3d::total_epochs(tc.schedule), result.model,
                         &result.optimizer);
  return result;
}

evalkit::DetectionsByVolume run_detect(const ExperimentConfig& cfg, const fs::path& checkpoint) {
  const Manifest manifest = require_manifest(cfg);
  auto ckpt = net3d::load_checkpoint(checkpoint);
  evalkit::DetectionsByVolume out;
  for (const auto& name : manifest.select(SplitRole::Test, cfg.split)) {
    const auto [v, anns] = load_volume(manifest.resolve(name));
    out[name] = evalkit::detect(ckpt.model, ckpt.spec, v, cfg.eval, name);
  }
  return out;
}

evalkit::GroundTruthByVolume load_ground_truth(const ExperimentConfig& cfg) {
  const Manifest manifest = require_manifest(cfg);
  evalkit::GroundTruthByVolume gts;
  for (const auto& name : manifest.select(SplitRole::Test, cfg.split))
    gts[name] = load_volume(manifest.resolve(name)).second;
  return gts;
}

std::string metrics_csv(const evalkit::Metrics& m) {
  std::string s = "class,ap,precision,recall,num_gt,num_det,num_tp,in_map,precision_undefined\n";
  char buf[256];
  for (std::size_t c = 0; c < m.per_class.size(); ++c) {
    const auto& cm = m.per_class[c];
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%d,%d,%d,%d,%d\n", class_name(static_cast<int>(c)).c_str(), cm.ap,
                  cm.precision, cm.recall, cm.num_gt, cm.num_det, cm.num_tp, cm.has_gt ? 1 : 0,
                  cm.precision_undefined ? 1 : 0);
    s += buf;
  }
  std::snprintf(buf, sizeof buf, "mAP,%.6f,,,,,,%d,\n", m.map, m.classes_in_map);
  return s + buf;
}

std::string metrics_text(const evalkit::Metrics& m) {
  std::string s = "class        AP(%)   P(%)    R(%)    gt   det\n";
  char buf[160];
  for (std::size_t c = 0; c < m.per_class.size(); ++c) {
    const auto& cm = m.per_class[c];
    if (!cm.has_gt) {
      std::snprintf(buf, sizeof buf, "%-11s  n/a     n/a     n/a     %-4d %d\n", class_name(static_cast<int>(c)).c_str(),
                    cm.num_gt, cm.num_det);
    } else {
      std::snprintf(buf, sizeof buf, "%-11s  %-6.1f  %-6.1f%s %-6.1f  %-4d %d\n", class_name(static_cast<int>(c)).c_str(),
                    100 * cm.ap, 100 * cm.precision, cm.precision_undefined ? "*" : " ", 100 * cm.recall, cm.num_gt,
                    cm.num_det);
    }
    s += buf;
  }
  std::snprintf(buf, sizeof buf, "mAP          %.1f  (over %d classes with ground truth; * = no detections at the operating point)\n",
                100 * m.map, m.classes_in_map);
  return s + buf;
}

evalkit::Metrics run_eval(const ExperimentConfig& cfg, const evalkit::DetectionsByVolume& dets) {
  const auto m = evalkit::evaluate(dets, load_ground_truth(cfg), cfg.eval, cfg.detector.model.num_classes);
  fs::create_directories(cfg.out);
  write_text_file(cfg.out / "metrics.csv", metrics_csv(m));
  write_text_file(cfg.out / "metrics.txt", metrics_text(m));
  return m;
}

evalkit::Metrics run_pipeline(const ExperimentConfig& cfg) {
  run_train(cfg);
  const auto dets = run_detect(cfg, cfg.out / "model.bdck");
  evalkit::write_detections(dets, cfg.out / "detections.txt");
  return run_eval(cfg, dets);
}

}  // namespace baggagedet::app
