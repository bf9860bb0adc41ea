#include <benchmark/benchmark.h>

#include "ksm/baselines.hpp"
#include "ksm/data.hpp"
#include "ksm/training.hpp"

using namespace ksm;

namespace {

Matrix random_inputs(Index rows, Index cols, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix X(rows, cols);
    for (Index i = 0; i < X.size(); ++i) X.data()[i] = normal(rng);
    return X;
}

Kernel kernel_for(int which) {
    switch (which) {
        case 0: return Kernel::linear();
        case 1: return Kernel::gaussian(1.0);
        default: return Kernel::power_cosine(3);
    }
}

}  // namespace

static void BM_Gram(benchmark::State& state) {
    const Kernel k = kernel_for(static_cast<int>(state.range(1)));
    const Matrix X = random_inputs(state.range(0), 64, 1);
    for (auto _ : state) benchmark::DoNotOptimize(k.gram(X));
    state.SetLabel(k.describe());
}
BENCHMARK(BM_Gram)->ArgsProduct({{256, 1024}, {0, 1, 2}})->Unit(benchmark::kMillisecond);

static void BM_ClosedFormResponse(benchmark::State& state) {
    const Index n = state.range(0);
    const ModelState s = init_model(n, 400, Kernel::power_cosine(3), 1e-3, 0);
    const Matrix X = random_inputs(64, 400, 2);
    for (auto _ : state) benchmark::DoNotOptimize(response_closed_form(s, X));
}
BENCHMARK(BM_ClosedFormResponse)->Arg(16)->Arg(128)->Arg(400)->Unit(benchmark::kMicrosecond);

static void BM_TrainingStep(benchmark::State& state) {
    const Index n = state.range(0);
    const Kernel k = kernel_for(static_cast<int>(state.range(1)));
    ModelState s = init_model(n, 400, k, 1e-3, 0);
    const Matrix X = random_inputs(64, 400, 3);
    const Phase rates{1, 1e-6, 0.0, 1e-5};
    for (auto _ : state) benchmark::DoNotOptimize(apply_update(s, X, rates, 1e-2, true));
    state.SetLabel(k.describe());
}
BENCHMARK(BM_TrainingStep)->ArgsProduct({{16, 128, 400}, {0, 2}})->Unit(benchmark::kMicrosecond);

static void BM_Nystrom(benchmark::State& state) {
    const Kernel k = Kernel::gaussian(1.0);
    const Matrix X = random_inputs(2000, 16, 4);
    const LandmarkSet lm = select_landmarks_uniform(X, state.range(0), 0);
    for (auto _ : state) benchmark::DoNotOptimize(nystrom_features(k, X, lm));
}
BENCHMARK(BM_Nystrom)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_KMeansLandmarks(benchmark::State& state) {
    const Matrix X = random_inputs(2000, 16, 5);
    for (auto _ : state) benchmark::DoNotOptimize(select_landmarks_kmeans(X, state.range(0), 0));
}
BENCHMARK(BM_KMeansLandmarks)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
