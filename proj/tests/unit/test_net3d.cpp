// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "../support/test_util.hpp"
#include "baggagedet/anchors/anchors.hpp"
#include "baggagedet/net3d/checkpoint.hpp"
#include "baggagedet/net3d/gradcheck.hpp"
#include "baggagedet/net3d/loss.hpp"
#include "baggagedet/net3d/model.hpp"
#include "baggagedet/net3d/optim.hpp"
#include "baggagedet/net3d/train.hpp"
#include "baggagedet/synthtip/synth.hpp"

using namespace baggagedet;
using namespace baggagedet::net3d;

namespace {

ModelConfig small_config() {
  ModelConfig m;
  m.widths = {4, 4, 8, 8};
  m.fpn_width = 8;
  m.head_convs = 2;
  m.norm_groups = 4;
  return m;
}

Tensor<float> random_input(std::array<int, 3> d, int c, std::uint64_t seed) {
  Tensor<float> x(d, c);
  Rng rng = make_rng(seed);
  for (auto& v : x.data) v = static_cast<float>(uniform01(rng));
  return x;
}

anchors::MatchResult empty_match(std::size_t n) {
  anchors::MatchResult m;
  m.gt_index.assign(n, -1);
  m.target_class.assign(n, 0);
  m.deltas.assign(n, {});
  return m;
}

std::vector<Sample> tiny_samples(int count, std::uint64_t seed, std::vector<int> class_counts) {
  std::vector<Sample> out;
  for (int i = 0; i < count; ++i) {
    synth::BagSpec s;
    s.dims = Dims3{32, 32, 32};
    s.clutter_min = 1;
    s.clutter_max = 3;
    s.class_counts = class_counts;
    s.seed = seed + static_cast<std::uint64_t>(i);
    auto bag = synth::generate_bag(s);
    out.push_back({std::move(bag.volume), std::move(bag.annotations)});
  }
  return out;
}

DetectorSpec small_spec() {
  DetectorSpec spec;
  spec.model = small_config();
  spec.scale.s = 1;
  return spec;
}

}  // namespace

TEST_CASE("forward shapes at 64^3 with F = 64") {
  ModelConfig cfg;
  Model<float> model(cfg);
  const auto r = model.forward(random_input({64, 64, 64}, 1, 1));
  const int strides[4] = {4, 8, 16, 32};
  for (int i = 0; i < 4; ++i) {
    CHECK(r.C[i].dims == std::array<int, 3>{64 / strides[i], 64 / strides[i], 64 / strides[i]});
    CHECK(r.C[i].c == stage_channels(cfg, i));
    CHECK(r.P[i].dims == r.C[i].dims);
    CHECK(r.P[i].c == 64);
    CHECK(r.heads.cls[i].dims == r.P[i].dims);
    CHECK(r.heads.cls[i].c == 6);
    CHECK(r.heads.reg[i].c == 6);
  }
  CHECK(r.P[0].dims == std::array<int, 3>{16, 16, 16});
}

TEST_CASE("doubling the input doubles every pyramid level") {
  ModelConfig cfg = small_config();
  cfg.num_anchors = 2;
  Model<float> model(cfg);
  const auto a = model.forward(random_input({32, 32, 64}, 1, 2));
  const auto b = model.forward(random_input({64, 64, 128}, 1, 3));
  for (int i = 0; i < 4; ++i) {
    for (int k = 0; k < 3; ++k) CHECK(b.P[i].dims[k] == 2 * a.P[i].dims[k]);
    CHECK(a.heads.cls[i].c == 12);
    CHECK(a.heads.reg[i].c == 12);
  }
  CHECK_THROWS_AS(model.forward(random_input({48, 32, 32}, 1, 4)), std::invalid_argument);
  CHECK_THROWS_AS(model.forward(random_input({32, 32, 32}, 2, 4)), std::invalid_argument);
}

TEST_CASE("all depths build with the right block type") {
  for (int d : {10, 18, 34, 50, 101}) {
    ModelConfig cfg = small_config();
    cfg.depth = d;
    CHECK(uses_bottleneck(d) == (d >= 50));
    Model<float> model(cfg);
    const auto r = model.forward(random_input({32, 32, 32}, 1, 5));
    CHECK(r.C[3].dims == std::array<int, 3>{1, 1, 1});
  }
  ModelConfig bad = small_config();
  bad.depth = 12;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("head parameter count does not depend on the pyramid levels used") {
  ModelConfig all = small_config();
  ModelConfig two = small_config();
  two.levels = {2, 3};
  CHECK(Model<float>(all).head_param_count() == Model<float>(two).head_param_count());
}

TEST_CASE("zero input gives a uniform softmax") {
  Model<float> model(small_config());
  const auto r = model.forward(Tensor<float>({32, 32, 32}, 1));
  const auto logits = flatten_cls(r.heads);
  REQUIRE(logits.size() % 6 == 0);
  double p[6];
  for (std::size_t a = 0; a < logits.size(); a += 6) {
    softmax_row(logits.data() + a, 6, p);
    for (double v : p) REQUIRE(v == doctest::Approx(1.0 / 6.0).epsilon(1e-6));
  }
}

TEST_CASE("loss examples") {
  const std::size_t n = 10;
  anchors::MatchResult m = empty_match(n);
  // perfect background
  std::vector<double> logits(n * 6, 0.0), reg(n * 6, 0.0);
  for (std::size_t a = 0; a < n; ++a) logits[a * 6] = 60.0;
  auto parts = compute_loss(logits, reg, m, LossConfig{});
  CHECK(parts.cls_loss < 1e-12);
  CHECK(parts.reg_loss == 0.0);
  CHECK(parts.num_negative == 1);

  // uniform softmax over one positive and three mined negatives
  m.gt_index[4] = 0;
  m.target_class[4] = 2;
  m.deltas[4] = anchors::Delta6{{0.1, -0.2, 0.3, 0.0, 0.5, -0.5}};
  m.positives = {4};
  std::fill(logits.begin(), logits.end(), 0.0);
  for (int i = 0; i < 6; ++i) reg[24 + static_cast<std::size_t>(i)] = m.deltas[4][i];
  parts = compute_loss(logits, reg, m, LossConfig{});
  CHECK(parts.cls_loss == doctest::Approx(std::log(6.0)).epsilon(1e-12));
  CHECK(parts.num_positive == 1);
  CHECK(parts.num_negative == 3);
  CHECK(parts.reg_loss == 0.0);
  CHECK(parts.total == parts.cls_loss + parts.reg_loss);
}

TEST_CASE("smooth L1 term and loss decomposition") {
  const std::size_t n = 4;
  anchors::MatchResult m = empty_match(n);
  m.gt_index[1] = 0;
  m.target_class[1] = 1;
  m.positives = {1};
  std::vector<double> logits(n * 6, 0.0), reg(n * 6, 0.0);
  reg[6] = 0.5;  // quadratic zone: 0.5 * 0.25
  reg[7] = -3;   // linear zone: 3 - 0.5
  const auto parts = compute_loss(logits, reg, m, LossConfig{});
  CHECK(parts.reg_loss == doctest::Approx(0.125 + 2.5));
  CHECK(parts.total == parts.cls_loss + parts.reg_loss);
  CHECK(parts.cls_loss >= 0);
  CHECK_THROWS(compute_loss(std::vector<double>(5 * 6), reg, m, LossConfig{}));
}

TEST_CASE("background-only loss is invariant under the z-flip of the anchor grid") {
  const Dims3 d{64, 32, 32};
  const auto grid = anchors::build_anchor_grid(d, anchors::AnchorConfig{});
  Rng rng = make_rng(3);
  std::vector<double> logits(grid.size() * 6), reg(grid.size() * 6, 0.0);
  for (auto& v : logits) v = normal01(rng);
  // the flipped volume's head outputs are the same values on the mirrored anchor grid
  std::vector<double> flipped(logits.size());
  for (std::size_t id = 0; id < grid.size(); ++id) {
    auto idx = grid.unflatten(id);
    idx.z = grid.levels[static_cast<std::size_t>(idx.level_slot)].grid.d - 1 - idx.z;
    const std::size_t to = grid.linear_id(idx);
    for (int k = 0; k < 6; ++k) flipped[to * 6 + static_cast<std::size_t>(k)] = logits[id * 6 + static_cast<std::size_t>(k)];
  }
  const auto empty = anchors::match_anchors(grid, {});
  const auto a = compute_loss(logits, reg, empty, LossConfig{});
  const auto b = compute_loss(flipped, reg, empty, LossConfig{});
  CHECK(a.cls_loss == b.cls_loss);
  CHECK(a.reg_loss == 0.0);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  Model<float> model(small_config());
  auto params = model.params();
  for (auto* p : params)
    for (auto& g : p->grad) g = 0.37f;
  std::vector<std::vector<float>> before;
  for (auto* p : params) before.push_back(p->value);
  Adam adam(params);
  adam.step(params, 0.0);
  for (std::size_t i = 0; i < params.size(); ++i) CHECK(params[i]->value == before[i]);
  CHECK(adam.steps() == 1);
}

TEST_CASE("loss decreases over 50 steps on one fixed batch") {
  ModelConfig cfg = small_config();
  Model<float> model(cfg);
  auto params = model.params();
  Adam adam(params);
  const auto samples = tiny_samples(1, 40, {0, 1, 0, 0, 0});
  const auto grid = anchors::build_anchor_grid(Dims3{32, 32, 32}, anchors::AnchorConfig{});
  const auto match = anchors::match_anchors(grid, samples[0].annotations);
  const auto x = to_tensor<float>(samples[0].volume);
  std::vector<float> dc, dr;
  double first = 0, last = 0;
  for (int step = 0; step < 50; ++step) {
    model.zero_grad();
    const auto r = model.forward(x, true);
    const auto parts = compute_loss(flatten_cls(r.heads), flatten_reg(r.heads), match, LossConfig{}, &dc, &dr);
    if (step == 0) first = parts.total;
    last = parts.total;
    model.backward(dc, dr);
    adam.step(params, 1e-3);
  }
  MESSAGE("loss " << first << " -> " << last);
  CHECK(last < 0.5 * first);
}

TEST_CASE("schedule helpers") {
  const auto s = default_schedule(2);
  REQUIRE(s.size() == 3);
  CHECK(total_epochs(s) == 6);
  int stage = -1;
  CHECK(lr_at(s, 0, &stage) == 1e-3);
  CHECK(stage == 0);
  CHECK(lr_at(s, 3, &stage) == 1e-4);
  CHECK(stage == 1);
  CHECK(lr_at(s, 5, &stage) == 1e-5);
  CHECK_THROWS(validate(std::vector<LrStage>{{1e-3, 1}, {1e-3, 1}}));
  CHECK_THROWS(validate(std::vector<LrStage>{{1e-3, 0}}));
}

TEST_CASE("one epoch per stage records the staged learning rates") {
  testutil::TempDir tmp("train");
  const auto samples = tiny_samples(2, 50, {1, 0, 0, 0, 0});
  TrainConfig tc;
  tc.schedule = default_schedule(1);
  augment::AugmentConfig aug;
  TrainOptions opts;
  opts.out_dir = tmp.path();
  const auto r = train(samples, small_spec(), tc, aug, opts);
  REQUIRE(r.log.epochs.size() == 3);
  CHECK(r.log.epochs[0].lr == 1e-3);
  CHECK(r.log.epochs[1].lr == 1e-4);
  CHECK(r.log.epochs[2].lr == 1e-5);
  for (const auto& e : r.log.epochs) {
    CHECK(std::isfinite(e.total));
    CHECK(e.total == e.cls_loss + e.reg_loss);
  }
  CHECK(std::filesystem::exists(tmp / "stage1.bdck"));
  CHECK(std::filesystem::exists(tmp / "stage3.bdck"));
  std::ifstream log(tmp / "train_log.csv");
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) {
    const auto rec = parse_log_line(line);
    CHECK(rec.epoch == lines + 1);
    ++lines;
  }
  CHECK(lines == 3);
  CHECK_THROWS_AS(train({}, small_spec(), tc, aug), std::invalid_argument);
}

TEST_CASE("classification loss halves on a 20-volume single-class set") {
  const auto samples = tiny_samples(20, 200, {1, 0, 0, 0, 0});
  DetectorSpec spec;
  spec.scale.s = 1;
  spec.model.fpn_width = 32;
  spec.model.head_convs = 2;
  TrainConfig tc;
  tc.schedule = {{1e-3, 8}};
  tc.seed = 3;
  const auto r = train(samples, spec, tc, augment::AugmentConfig{});
  const double first = r.log.epochs.front().cls_loss, last = r.log.epochs.back().cls_loss;
  MESSAGE("cls_loss " << first << " -> " << last);
  CHECK(last < first / 2);
}

TEST_CASE("training is deterministic in the seed") {
  const auto samples = tiny_samples(2, 60, {0, 0, 1, 0, 0});
  TrainConfig tc;
  tc.schedule = {{1e-3, 2}};
  tc.seed = 9;
  augment::AugmentConfig aug;
  aug.p = 0.5;
  aug.seed = 9;
  auto a = train(samples, small_spec(), tc, aug);
  auto b = train(samples, small_spec(), tc, aug);
  const auto pa = a.model.params(), pb = b.model.params();
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value == pb[i]->value);
}

TEST_CASE("checkpoint round-trip") {
  testutil::TempDir tmp("ckpt");
  DetectorSpec spec = small_spec();
  spec.model.seed = 4;
  spec.scale.s = 2;
  spec.anchors.base_sizes = {4, 8, 16, 32};
  spec.channels = ChannelMode::Low;
  Model<float> model(spec.model);
  auto params = model.params();
  Adam adam(params);
  for (auto* p : params)
    for (auto& g : p->grad) g = 0.1f;
  adam.step(params, 1e-3);
  save_checkpoint(tmp / "m.bdck", spec, 7, model, &adam);
  const Checkpoint back = load_checkpoint(tmp / "m.bdck");
  CHECK(back.epoch == 7);
  CHECK(to_json(back.spec) == to_json(spec));
  const auto pb = back.model.params();
  REQUIRE(pb.size() == params.size());
  for (std::size_t i = 0; i < pb.size(); ++i) {
    CHECK(pb[i]->name == params[i]->name);
    CHECK(pb[i]->value == params[i]->value);
  }
  REQUIRE(back.optimizer.has_value());
  CHECK(back.optimizer->steps() == 1);
  CHECK(back.optimizer->m == adam.m);
  CHECK(back.optimizer->v == adam.v);

  std::ofstream(tmp / "junk.bdck") << "not a checkpoint";
  CHECK_THROWS_AS(load_checkpoint(tmp / "junk.bdck"), CheckpointError);
}

TEST_CASE("gradient check on a reduced configuration") {
  // the full-size check runs in the acceptance suite; this one keeps the unit suite fast
  GradCheckConfig cfg;
  cfg.model.head_convs = 1;
  cfg.model.widths = {1, 1, 1, 1};
  cfg.model.fpn_width = 1;
  cfg.model.norm_groups = 1;
  const auto r = grad_check(cfg);
  MESSAGE("max rel error " << r.max_rel_error << " over " << r.num_checked << " params");
  CHECK(r.max_rel_error < 1e-2);
  CHECK(r.num_checked > 0);
}
