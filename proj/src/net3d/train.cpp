// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/net3d/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "baggagedet/volcore/bvox.hpp"
#include "baggagedet/volcore/resample.hpp"

namespace baggagedet::net3d {

void validate(const TrainConfig& cfg) {
  validate(cfg.schedule);
  if (cfg.batch_size < 1) throw std::invalid_argument("train.batch_size must be >= 1");
  if (!(cfg.loss.neg_ratio > 0)) throw std::invalid_argument("train.neg_ratio must be positive");
  if (cfg.loss.focal && !(cfg.loss.focal_gamma >= 0)) throw std::invalid_argument("train.focal_gamma must be >= 0");
}

PreparedSample prepare_sample(const Volume& v, const std::vector<Annotation>& anns, const DetectorSpec& spec) {
  const Volume selected = select_channels(v, spec.channels);
  const Volume scaled = resample(selected, spec.scale);
  const auto boxes = rescale_boxes(boxes_of(anns), spec.scale, scaled.dims());
  PreparedSample out{pad_to_multiple(scaled, 32).volume, anns, v.dims()};
  for (std::size_t i = 0; i < anns.size(); ++i) out.annotations[i].box = boxes[i];
  return out;
}

template <class T>
Tensor<T> to_tensor(const Volume& v) {
  const Dims3 d = v.dims();
  Tensor<T> t({d.d, d.h, d.w}, v.channels());
  const std::size_t n = v.channel_size();
  for (int c = 0; c < v.channels(); ++c) {
    const auto ch = v.channel(c);
    for (std::size_t i = 0; i < n; ++i) t.data[i * v.channels() + c] = static_cast<T>(ch[i]);
  }
  return t;
}

template Tensor<float> to_tensor<float>(const Volume&);
template Tensor<double> to_tensor<double>(const Volume&);

std::vector<Sample> load_split(const Manifest& manifest, SplitRole role, int split) {
  std::vector<Sample> out;
  for (const auto& name : manifest.select(role, split)) {
    auto [v, anns] = load_volume(manifest.resolve(name));
    out.push_back({std::move(v), std::move(anns)});
  }
  return out;
}

std::string format_log_line(const EpochRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d,%.6g,%.9g,%.9g,%.9g", r.epoch, r.lr, r.cls_loss, r.reg_loss, r.total);
  return buf;
}

EpochRecord parse_log_line(const std::string& line) {
  EpochRecord r;
  char comma[4];
  std::istringstream is(line);
  if (!(is >> r.epoch >> comma[0] >> r.lr >> comma[1] >> r.cls_loss >> comma[2] >> r.reg_loss >> comma[3] >>
        r.total))
    throw std::invalid_argument("malformed train log line: " + line);
  return r;
}

std::string TrainLog::to_text() const {
  std::string s;
  for (const auto& e : epochs) s += format_log_line(e) + "\n";
  return s;
}

namespace {

std::string dims_key(const Dims3& d) {
  return std::to_string(d.d) + "x" + std::to_string(d.h) + "x" + std::to_string(d.w);
}

}  // namespace

TrainResult train(const std::vector<Sample>& samples, const DetectorSpec& spec_in, const TrainConfig& cfg,
                  const augment::AugmentConfig& aug, const TrainOptions& opts) {
  if (samples.empty()) throw std::invalid_argument("training split is empty");
  validate(cfg);
  augment::validate(aug);
  DetectorSpec spec = spec_in;
  spec.model.seed = cfg.seed;
  spec.model.num_anchors = spec.anchors.num_anchors_per_location();
  spec.model.levels = spec.anchors.levels;
  spec.model.in_channels = channel_count(spec.channels);
  anchors::validate(spec.anchors);

  std::vector<PreparedSample> prepared(samples.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(samples.size()); ++i)
    prepared[i] = prepare_sample(samples[i].volume, samples[i].annotations, spec);

  TrainResult result{spec, Model<float>(spec.model), Adam{}, {}};
  auto params = result.model.params();
  result.optimizer = Adam(params);
  std::map<std::string, anchors::AnchorSet> anchor_cache;
  LossConfig loss_cfg = cfg.loss;
  loss_cfg.num_classes = spec.model.num_classes;

  if (!opts.out_dir.empty()) std::filesystem::create_directories(opts.out_dir);
  const int epochs = total_epochs(cfg.schedule);
  const int n = static_cast<int>(prepared.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::vector<float> d_cls, d_reg;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    int stage = 0;
    const double lr = lr_at(cfg.schedule, epoch, &stage);
    std::iota(order.begin(), order.end(), 0);
    Rng order_rng = make_rng(cfg.seed, {0x5eed, static_cast<std::uint64_t>(epoch)});
    shuffle_in_place(order, order_rng);

    double cls_sum = 0.0, reg_sum = 0.0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int end = std::min(n, start + cfg.batch_size);
      const float scale = 1.0f / static_cast<float>(end - start);
      result.model.zero_grad();
      for (int b = start; b < end; ++b) {
        const int idx = order[static_cast<std::size_t>(b)];
        const PreparedSample& ps = prepared[static_cast<std::size_t>(idx)];
        Rng arng = augment::sample_rng(aug, epoch, idx);
        auto augmented = augment::random_augment(ps.volume, boxes_of(ps.annotations), aug, arng);
        std::vector<Annotation> gts = ps.annotations;
        for (std::size_t g = 0; g < gts.size(); ++g) gts[g].box = augmented.boxes[g];

        const Dims3 dims = augmented.volume.dims();
        auto it = anchor_cache.find(dims_key(dims));
        if (it == anchor_cache.end())
          it = anchor_cache.emplace(dims_key(dims), anchors::build_anchor_grid(dims, spec.anchors)).first;
        const auto match = anchors::match_anchors(it->second, gts, spec.match_iou);

        const auto fwd = result.model.forward(to_tensor<float>(augmented.volume), true);
        const auto parts =
            compute_loss(flatten_cls(fwd.heads), flatten_reg(fwd.heads), match, loss_cfg, &d_cls, &d_reg);
        if (!std::isfinite(parts.total))
          throw NonFiniteLossError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", volume " +
                                   ps.volume.meta.source_id + " (cls " + std::to_string(parts.cls_loss) + ", reg " +
                                   std::to_string(parts.reg_loss) + ")");
        for (auto& g : d_cls) g *= scale;
        for (auto& g : d_reg) g *= scale;
        result.model.backward(d_cls, d_reg);
        cls_sum += parts.cls_loss;
        reg_sum += parts.reg_loss;
      }
      result.optimizer.step(params, lr);
    }

    EpochRecord rec{epoch + 1, lr, cls_sum / n, reg_sum / n, 0.0};
    rec.total = rec.cls_loss + rec.reg_loss;
    result.log.epochs.push_back(rec);
    if (!opts.out_dir.empty()) {
      std::ofstream log(opts.out_dir / "train_log.csv", std::ios::app);
      log << format_log_line(rec) << "\n";
    }
    if (opts.on_epoch) opts.on_epoch(rec);

    int next_stage = stage;
    if (epoch + 1 < epochs) lr_at(cfg.schedule, epoch + 1, &next_stage);
    if (!opts.out_dir.empty() && (next_stage != stage || epoch + 1 == epochs))
      save_checkpoint(opts.out_dir / ("stage" + std::to_string(stage + 1) + ".bdck"), result.spec, epoch + 1,
                      result.model, &result.optimizer);
  }
  return result;
}

}  // namespace baggagedet::net3d
