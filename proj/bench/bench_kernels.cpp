// Optimised OpenMP kernels against the serial reference on the autoencoder's layer shapes.
#include <benchmark/benchmark.h>

#include <random>

#include "dae/kernels.hpp"
#include "dae/reference.hpp"

namespace {

dae::Tensor random_tensor(dae::Shape s, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    dae::Tensor t(s);
    for (float& v : t.data()) v = dist(gen);
    return t;
}

dae::ConvWeights random_weights(int cin, int cout, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<float> dist(-0.1f, 0.1f);
    dae::ConvWeights w(3, 3, cin, cout);
    for (float& v : w.kernels) v = dist(gen);
    return w;
}

// Args: spatial side, in channels, out channels. Batch of 10 as in training.
void BM_Conv2d(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const auto x = random_tensor({10, side, side, static_cast<int>(state.range(1))}, 1);
    const auto w = random_weights(static_cast<int>(state.range(1)), static_cast<int>(state.range(2)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(dae::conv2d(x, w));
}

void BM_Conv2dReference(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const auto x = random_tensor({10, side, side, static_cast<int>(state.range(1))}, 1);
    const auto w = random_weights(static_cast<int>(state.range(1)), static_cast<int>(state.range(2)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(dae::reference::conv2d(x, w));
}

void BM_Conv2dGrads(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const int cin = static_cast<int>(state.range(1)), cout = static_cast<int>(state.range(2));
    const auto x = random_tensor({10, side, side, cin}, 1);
    const auto w = random_weights(cin, cout, 2);
    const auto up = random_tensor({10, side, side, cout}, 3);
    for (auto _ : state) benchmark::DoNotOptimize(dae::conv2d_grads(x, w, up));
}

void BM_Conv2dGradsReference(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const int cin = static_cast<int>(state.range(1)), cout = static_cast<int>(state.range(2));
    const auto x = random_tensor({10, side, side, cin}, 1);
    const auto w = random_weights(cin, cout, 2);
    const auto up = random_tensor({10, side, side, cout}, 3);
    for (auto _ : state) benchmark::DoNotOptimize(dae::reference::conv2d_grads(x, w, up));
}

void layer_shapes(benchmark::internal::Benchmark* b) {
    b->Args({64, 1, 32})->Args({32, 32, 32})->Args({16, 32, 32})->Args({64, 32, 1});
    b->Unit(benchmark::kMillisecond);
}

void BM_MaxPool2(benchmark::State& state) {
    const auto x = random_tensor({10, 64, 64, 32}, 4);
    for (auto _ : state) benchmark::DoNotOptimize(dae::maxpool2(x));
}

void BM_MaxPool2Reference(benchmark::State& state) {
    const auto x = random_tensor({10, 64, 64, 32}, 4);
    for (auto _ : state) benchmark::DoNotOptimize(dae::reference::maxpool2(x));
}

}  // namespace

BENCHMARK(BM_Conv2d)->Apply(layer_shapes);
BENCHMARK(BM_Conv2dReference)->Apply(layer_shapes);
BENCHMARK(BM_Conv2dGrads)->Apply(layer_shapes);
BENCHMARK(BM_Conv2dGradsReference)->Apply(layer_shapes);
BENCHMARK(BM_MaxPool2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MaxPool2Reference)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
