#include <benchmark/benchmark.h>

#include <random>

#include "sslcal/kernels.hpp"
#include "sslcal/model.hpp"

namespace {

using sslcal::Matrix;

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(r, c);
    for (double& v : m.data()) v = n(rng);
    return m;
}

template <bool Parallel>
void BM_AffineForward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto w = static_cast<std::size_t>(state.range(1));
    const Matrix in = random_matrix(n, w, 1);
    const Matrix weight = random_matrix(w, w, 2);
    const std::vector<double> bias(w, 0.1);
    Matrix out(n, w);
    for (auto _ : state) {
        if constexpr (Parallel) sslcal::kernels::omp::affine_forward(in, weight, bias, out);
        else sslcal::kernels::serial::affine_forward(in, weight, bias, out);
        benchmark::DoNotOptimize(out.data().data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * w * w));
}

template <bool Parallel>
void BM_AffineBackward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto w = static_cast<std::size_t>(state.range(1));
    const Matrix in = random_matrix(n, w, 1);
    const Matrix weight = random_matrix(w, w, 2);
    const Matrix dout = random_matrix(n, w, 3);
    Matrix dweight(w, w), din(n, w);
    std::vector<double> dbias(w);
    for (auto _ : state) {
        if constexpr (Parallel) sslcal::kernels::omp::affine_backward(in, weight, dout, dweight, dbias, &din);
        else sslcal::kernels::serial::affine_backward(in, weight, dout, dweight, dbias, &din);
        benchmark::DoNotOptimize(din.data().data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * w * w));
}

void BM_MlpStep(benchmark::State& state, bool reference) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto params = sslcal::init_params({2, 64, 64, 4}, sslcal::Activation::Tanh, 7);
    const Matrix x = random_matrix(n, 2, 4);
    const Matrix dl = random_matrix(n, 4, 5);
    for (auto _ : state) {
        if (reference) {
            auto f = sslcal::forward_reference(params, x);
            benchmark::DoNotOptimize(sslcal::backward_reference(params, f.cache, dl));
        } else {
            auto f = sslcal::forward(params, x);
            benchmark::DoNotOptimize(sslcal::backward(params, f.cache, dl));
        }
    }
}

const std::vector<std::vector<std::int64_t>> kShapes = {{64, 256, 4096}, {64, 256}};

}  // namespace

BENCHMARK(BM_AffineForward<false>)->ArgsProduct(kShapes);
BENCHMARK(BM_AffineForward<true>)->ArgsProduct(kShapes);
BENCHMARK(BM_AffineBackward<false>)->ArgsProduct(kShapes);
BENCHMARK(BM_AffineBackward<true>)->ArgsProduct(kShapes);
BENCHMARK_CAPTURE(BM_MlpStep, serial, true)->Arg(80)->Arg(2000);
BENCHMARK_CAPTURE(BM_MlpStep, omp, false)->Arg(80)->Arg(2000);

BENCHMARK_MAIN();
