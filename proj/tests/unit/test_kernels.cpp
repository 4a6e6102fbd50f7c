// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "baggagedet/core/rng.hpp"
#include "baggagedet/kernels/conv3d.hpp"

using namespace baggagedet;
using namespace baggagedet::kernels;

namespace {

template <class T>
std::vector<T> randv(Rng& rng, std::size_t n) {
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(uniform(rng, -1, 1));
  return v;
}

template <class T, class U>
double max_abs_diff(const std::vector<T>& a, const std::vector<U>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  return m;
}

template <class T>
void compare(const ConvGeom& g, double tol, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  const auto x = randv<T>(rng, g.in_positions() * g.cin);
  const auto w = randv<T>(rng, g.weight_count());
  const auto b = randv<T>(rng, static_cast<std::size_t>(g.cout));
  const auto dy = randv<T>(rng, g.out_positions() * g.cout);

  std::vector<T> y1(g.out_positions() * g.cout), y2(y1.size());
  conv3d_forward(g, x.data(), w.data(), b.data(), y1.data());
  reference::conv3d_forward(g, x.data(), w.data(), b.data(), y2.data());
  CHECK(max_abs_diff(y1, y2) < tol);

  std::vector<T> dx1(x.size()), dx2(x.size()), dw1(w.size(), T(0.5)), dw2(w.size(), T(0.5)), db1(b.size(), T(0)),
      db2(b.size(), T(0));
  conv3d_backward(g, x.data(), w.data(), dy.data(), dx1.data(), dw1.data(), db1.data());
  reference::conv3d_backward(g, x.data(), w.data(), dy.data(), dx2.data(), dw2.data(), db2.data());
  CHECK(max_abs_diff(dx1, dx2) < tol);
  CHECK(max_abs_diff(dw1, dw2) < tol);
  CHECK(max_abs_diff(db1, db2) < tol);
}

}  // namespace

TEST_CASE("output geometry") {
  ConvGeom g;
  g.in = {16, 9, 8};
  g.k = 3;
  g.stride = 2;
  g.pad = 1;
  CHECK(g.out() == std::array<int, 3>{8, 5, 4});
  g.k = 1;
  g.stride = 1;
  g.pad = 0;
  CHECK(g.pointwise());
  g.in = {0, 1, 1};
  CHECK_THROWS_AS(validate(g), std::invalid_argument);
}

TEST_CASE("parallel kernels match the serial reference") {
  struct Case {
    std::array<int, 3> in;
    int cin, cout, k, stride, pad;
  };
  const std::vector<Case> cases{{{8, 8, 8}, 3, 5, 3, 1, 1},  {{9, 7, 6}, 2, 4, 3, 2, 1}, {{8, 8, 8}, 4, 6, 1, 1, 0},
                                {{8, 6, 4}, 3, 2, 1, 2, 0},  {{12, 12, 12}, 1, 8, 7, 2, 3}, {{5, 5, 5}, 6, 3, 3, 1, 0},
                                {{4, 4, 4}, 16, 16, 3, 1, 1}};
  std::uint64_t seed = 1;
  for (const auto& c : cases) {
    ConvGeom g;
    g.in = c.in;
    g.cin = c.cin;
    g.cout = c.cout;
    g.k = c.k;
    g.stride = c.stride;
    g.pad = c.pad;
    INFO("k " << c.k << " stride " << c.stride << " pad " << c.pad << " cin " << c.cin);
    compare<double>(g, 1e-10, seed++);
    compare<float>(g, 1e-3, seed++);
  }
}

TEST_CASE("gemm against a triple loop") {
  Rng rng = make_rng(4);
  const int m = 7, n = 5, k = 9;
  for (bool ta : {false, true})
    for (bool tb : {false, true}) {
      const auto a = randv<double>(rng, static_cast<std::size_t>(m * k));
      const auto b = randv<double>(rng, static_cast<std::size_t>(k * n));
      auto c = randv<double>(rng, static_cast<std::size_t>(m * n));
      std::vector<double> expect(c);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          double s = 0;
          for (int p = 0; p < k; ++p) s += (ta ? a[p * m + i] : a[i * k + p]) * (tb ? b[j * k + p] : b[p * n + j]);
          expect[static_cast<std::size_t>(i * n + j)] = 2.0 * s + 0.5 * expect[static_cast<std::size_t>(i * n + j)];
        }
      gemm(ta, tb, m, n, k, 2.0, a.data(), ta ? m : k, b.data(), tb ? k : n, 0.5, c.data(), n);
      CHECK(max_abs_diff(c, expect) < 1e-12);
    }
}

TEST_CASE("gemm at sizes past the small-matrix paths") {
  Rng rng = make_rng(9);
  const int m = 130, n = 343, k = 216;
  for (bool ta : {false, true})
    for (bool tb : {false, true}) {
      const auto a = randv<double>(rng, static_cast<std::size_t>(m * k));
      const auto b = randv<double>(rng, static_cast<std::size_t>(k * n));
      std::vector<double> expect(static_cast<std::size_t>(m * n));
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          double s = 0;
          for (int p = 0; p < k; ++p) s += (ta ? a[p * m + i] : a[i * k + p]) * (tb ? b[j * k + p] : b[p * n + j]);
          expect[static_cast<std::size_t>(i * n + j)] = s;
        }
      std::vector<double> c(expect.size(), 3.0);
      gemm(ta, tb, m, n, k, 1.0, a.data(), ta ? m : k, b.data(), tb ? k : n, 0.0, c.data(), n);
      CHECK(max_abs_diff(c, expect) < 1e-10);
      const std::vector<float> af(a.begin(), a.end()), bf(b.begin(), b.end());
      std::vector<float> cf(expect.size(), 3.0f);
      gemm(ta, tb, m, n, k, 1.0f, af.data(), ta ? m : k, bf.data(), tb ? k : n, 0.0f, cf.data(), n);
      CHECK(max_abs_diff(cf, expect) < 1e-3);
    }
}
