// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace baggagedet::net3d {

/// Single-sample feature volume, channels-last: data[((z*h + y)*w + x)*c + ch].
template <class T>
struct Tensor {
  std::array<int, 3> dims{};  // (D, H, W)
  int c = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(std::array<int, 3> d, int channels) : dims(d), c(channels), data(positions() * channels, T(0)) {}

  std::size_t positions() const { return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]; }
  std::size_t size() const { return data.size(); }
  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }
  T& at(int z, int y, int x, int ch) {
    return data[((static_cast<std::size_t>(z) * dims[1] + y) * dims[2] + x) * c + ch];
  }
  T at(int z, int y, int x, int ch) const {
    return data[((static_cast<std::size_t>(z) * dims[1] + y) * dims[2] + x) * c + ch];
  }
  bool same_shape(const Tensor& o) const { return dims == o.dims && c == o.c; }
};

/// Trainable parameter with its accumulated gradient.
template <class T>
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;

  Param() = default;
  Param(std::string n, std::vector<int> s);
  std::size_t size() const { return value.size(); }
  void zero_grad();
};

extern template struct Param<float>;
extern template struct Param<double>;

}  // namespace baggagedet::net3d
