// SPDX-License-Identifier: Apache-2.0
// Parallel im2col+GEMM convolution against the serial direct-loop reference.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "baggagedet/kernels/conv3d.hpp"

namespace {

using baggagedet::kernels::ConvGeom;

ConvGeom geom_for(const benchmark::State& st) {
  ConvGeom g;
  const int n = static_cast<int>(st.range(0));
  g.in = {n, n, n};
  g.cin = static_cast<int>(st.range(1));
  g.cout = static_cast<int>(st.range(2));
  g.k = 3;
  g.stride = 1;
  g.pad = 1;
  return g;
}

struct Buffers {
  std::vector<float> x, w, b, y, dy, dx, dw, db;
  explicit Buffers(const ConvGeom& g) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<float> u(-1.f, 1.f);
    auto fill = [&](std::vector<float>& v, std::size_t n) {
      v.resize(n);
      for (auto& e : v) e = u(rng);
    };
    fill(x, g.in_positions() * g.cin);
    fill(w, g.weight_count());
    fill(b, g.cout);
    fill(dy, g.out_positions() * g.cout);
    y.resize(g.out_positions() * g.cout);
    dx.resize(x.size());
    dw.assign(w.size(), 0.f);
    db.assign(b.size(), 0.f);
  }
};

void set_flops(benchmark::State& st, const ConvGeom& g, double passes) {
  const double flops = 2.0 * static_cast<double>(g.out_positions()) * g.patch() * g.cout * passes;
  st.counters["GFLOP/s"] = benchmark::Counter(flops * st.iterations() / 1e9, benchmark::Counter::kIsRate);
}

void BM_ForwardParallel(benchmark::State& st) {
  const auto g = geom_for(st);
  Buffers buf(g);
  for (auto _ : st) {
    baggagedet::kernels::conv3d_forward(g, buf.x.data(), buf.w.data(), buf.b.data(), buf.y.data());
    benchmark::DoNotOptimize(buf.y.data());
  }
  set_flops(st, g, 1.0);
}

void BM_ForwardReference(benchmark::State& st) {
  const auto g = geom_for(st);
  Buffers buf(g);
  for (auto _ : st) {
    baggagedet::kernels::reference::conv3d_forward(g, buf.x.data(), buf.w.data(), buf.b.data(), buf.y.data());
    benchmark::DoNotOptimize(buf.y.data());
  }
  set_flops(st, g, 1.0);
}

void BM_BackwardParallel(benchmark::State& st) {
  const auto g = geom_for(st);
  Buffers buf(g);
  for (auto _ : st) {
    baggagedet::kernels::conv3d_backward(g, buf.x.data(), buf.w.data(), buf.dy.data(), buf.dx.data(), buf.dw.data(),
                                         buf.db.data());
    benchmark::DoNotOptimize(buf.dx.data());
  }
  set_flops(st, g, 2.0);
}

void BM_BackwardReference(benchmark::State& st) {
  const auto g = geom_for(st);
  Buffers buf(g);
  for (auto _ : st) {
    baggagedet::kernels::reference::conv3d_backward(g, buf.x.data(), buf.w.data(), buf.dy.data(), buf.dx.data(),
                                                    buf.dw.data(), buf.db.data());
    benchmark::DoNotOptimize(buf.dx.data());
  }
  set_flops(st, g, 2.0);
}

// (spatial extent, cin, cout)
#define CONV_ARGS ->Args({16, 16, 16})->Args({16, 32, 32})->Args({8, 64, 64})->Unit(benchmark::kMillisecond)

BENCHMARK(BM_ForwardParallel) CONV_ARGS;
BENCHMARK(BM_ForwardReference) CONV_ARGS;
BENCHMARK(BM_BackwardParallel) CONV_ARGS;
BENCHMARK(BM_BackwardReference) CONV_ARGS;

}  // namespace

BENCHMARK_MAIN();
