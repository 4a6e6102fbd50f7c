// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "baggagedet/volcore/box.hpp"
#include "baggagedet/volcore/volume.hpp"

namespace baggagedet::anchors {

inline constexpr int kNumPyramidLevels = 4;  // P2..P5
inline constexpr std::array<int, kNumPyramidLevels> kLevelStrides = {4, 8, 16, 32};

struct AnchorConfig {
  /// Cube side per level at input resolution, one per entry of `levels`.
  std::vector<double> base_sizes{8, 16, 32, 64};
  std::vector<double> scale_multipliers{1.0};
  /// Pyramid levels in use, 0 = P2 ... 3 = P5. Ascending.
  std::vector<int> levels{0, 1, 2, 3};

  int num_anchors_per_location() const { return static_cast<int>(scale_multipliers.size()); }
};

/// Throws std::invalid_argument naming the offending field.
void validate(const AnchorConfig& cfg);

struct LevelGrid {
  int level = 0;  // 0 = P2
  int stride = 4;
  double base_size = 8;
  Dims3 grid;
  int n_a = 1;
  std::size_t offset = 0;  // first linear anchor id of this level
  /// Anchors on this level: n_a per grid position.
  std::size_t count() const;
};

struct AnchorIndex {
  int level_slot = 0;  // index into AnchorSet::levels
  int z = 0, y = 0, x = 0, a = 0;
  friend bool operator==(const AnchorIndex&, const AnchorIndex&) = default;
};

/// Immutable anchor grid. Linear ids run over (level, z, y, x, a) with `a` fastest.
struct AnchorSet {
  Dims3 input_dims;
  int n_a = 1;
  std::vector<double> multipliers;
  std::vector<LevelGrid> levels;
  std::vector<Box3D> boxes;  // materialized, indexed by linear id

  std::size_t size() const { return boxes.size(); }
  std::size_t linear_id(const AnchorIndex& idx) const;
  AnchorIndex unflatten(std::size_t id) const;
};

/// Input dims must be divisible by 32.
AnchorSet build_anchor_grid(const Dims3& input_dims, const AnchorConfig& cfg);

struct Delta6 {
  std::array<double, 6> t{};  // (tz, ty, tx, td, th, tw)
  double& operator[](int i) { return t[i]; }
  double operator[](int i) const { return t[i]; }
  friend bool operator==(const Delta6&, const Delta6&) = default;
};

inline constexpr double kLogRatioClamp = 4.0;

Delta6 encode_deltas(const Box3D& anchor, const Box3D& gt);
Box3D decode_deltas(const Box3D& anchor, const Delta6& d);

struct MatchResult {
  /// -1 negative, otherwise the matched gt index.
  std::vector<int> gt_index;
  /// 0 background, otherwise 1 + class id (softmax target).
  std::vector<int> target_class;
  /// Regression targets, valid only where gt_index >= 0.
  std::vector<Delta6> deltas;
  std::vector<std::size_t> positives;  // ascending anchor ids

  std::size_t num_positive() const { return positives.size(); }
};

inline constexpr double kDefaultMatchIou = 0.1;

/// Positive iff best IoU >= iou_t, matched to the argmax gt (lower index on ties).
/// Each gt additionally forces one anchor positive: gts are visited by descending best IoU
/// (lower index on ties) and each claims its max-IoU anchor among those not yet claimed
/// (lowest id on ties). A forced anchor is assigned to the gt that claimed it.
MatchResult match_anchors(const AnchorSet& anchors, const std::vector<Annotation>& gts, double iou_t = kDefaultMatchIou);

}  // namespace baggagedet::anchors
