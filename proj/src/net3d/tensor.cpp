// SPDX-License-Identifier: Apache-2.0
#include "baggagedet/net3d/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace baggagedet::net3d {

template <class T>
Param<T>::Param(std::string n, std::vector<int> s) : name(std::move(n)), shape(std::move(s)) {
  const std::size_t count =
      std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<std::size_t>());
  value.assign(count, T(0));
  grad.assign(count, T(0));
}

template <class T>
void Param<T>::zero_grad() {
  std::fill(grad.begin(), grad.end(), T(0));
}

template struct Param<float>;
template struct Param<double>;

}  // namespace baggagedet::net3d
