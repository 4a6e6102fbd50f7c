// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "baggagedet/net3d/layers.hpp"
#include "baggagedet/net3d/tensor.hpp"

namespace baggagedet::net3d {

struct ModelConfig {
  int depth = 10;                         // 10, 18, 34 (basic blocks) or 50, 101 (bottleneck)
  std::array<int, 4> widths{16, 32, 64, 128};
  int in_channels = 1;
  int fpn_width = 64;                     // F, shared by all P levels and both head towers
  int num_classes = 5;                    // K foreground classes
  int num_anchors = 1;                    // n_a
  std::vector<int> levels{0, 1, 2, 3};    // pyramid levels fed to the heads, 0 = P2
  int norm_groups = 8;
  int head_convs = 4;
  std::uint64_t seed = 0;

  int cls_channels() const { return (1 + num_classes) * num_anchors; }
  int reg_channels() const { return 6 * num_anchors; }
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Throws std::invalid_argument naming the offending config key.
void validate(const ModelConfig& cfg);
std::array<int, 4> block_counts(int depth);
bool uses_bottleneck(int depth);
/// Output channels of stage i (C_{i+2}).
int stage_channels(const ModelConfig& cfg, int stage);

std::string to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

template <class T>
struct HeadOutputs {
  /// One entry per configured level, in level order. cls has (1+K)·n_a channels, reg 6·n_a.
  std::vector<Tensor<T>> cls;
  std::vector<Tensor<T>> reg;
};

template <class T>
struct ForwardResult {
  std::array<Tensor<T>, 4> C;  // C2..C5
  std::array<Tensor<T>, 4> P;  // P2..P5; levels below the lowest configured one stay empty
  HeadOutputs<T> heads;
};

/// Anchor-major flattening in (level, z, y, x, a) order: logits [A][1+K], deltas [A][6].
template <class T>
std::vector<T> flatten_cls(const HeadOutputs<T>& h);
template <class T>
std::vector<T> flatten_reg(const HeadOutputs<T>& h);

template <class T>
class Model {
 public:
  explicit Model(const ModelConfig& cfg);
  ~Model();
  Model(Model&&) noexcept;
  Model& operator=(Model&&) noexcept;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return cfg_; }

  /// Input dims must be divisible by 32 and channels must match the config. When `train` is
  /// true the activations needed by backward() are retained.
  ForwardResult<T> forward(const Tensor<T>& x, bool train = false);

  /// Backpropagates flattened gradients w.r.t. the head outputs of the last training forward
  /// and accumulates parameter gradients.
  void backward(const std::vector<T>& d_cls, const std::vector<T>& d_reg);

  std::vector<Param<T>*> params();
  std::vector<const Param<T>*> params() const;
  std::size_t num_params() const;
  /// Parameters of the shared heads only.
  std::size_t head_param_count() const;
  void zero_grad();

  /// Copies parameter values by name; shapes must match.
  template <class U>
  void copy_values_from(const Model<U>& other);

 private:
  struct Impl;
  ModelConfig cfg_;
  std::unique_ptr<Impl> impl_;
};

template <class T>
template <class U>
void Model<T>::copy_values_from(const Model<U>& other) {
  auto dst = params();
  auto src = other.params();
  if (dst.size() != src.size()) throw std::invalid_argument("model parameter lists differ");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i]->name != src[i]->name || dst[i]->shape != src[i]->shape)
      throw std::invalid_argument("parameter mismatch at " + dst[i]->name);
    for (std::size_t j = 0; j < dst[i]->size(); ++j) dst[i]->value[j] = static_cast<T>(src[i]->value[j]);
  }
}

extern template class Model<float>;
extern template class Model<double>;

}  // namespace baggagedet::net3d
