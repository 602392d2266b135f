// Serial reference kernels against the OpenMP versions.
//   ./bench_kernels --benchmark_filter=conv
//   OMP_NUM_THREADS=4 ./bench_kernels

#include <benchmark/benchmark.h>

#include <random>

#include "vistra/cnn.hpp"
#include "vistra/reference.hpp"
#include "vistra/resampler.hpp"

using namespace vistra;

namespace {

Tensor3 random_tensor(int c, int size, std::mt19937& rng) {
    Tensor3 t(c, size, size);
    std::uniform_real_distribution<float> d(0.0f, 1.0f);
    for (float& v : t.data)
        v = d(rng);
    return t;
}

cnn::ConvParams random_conv(int out, int in, std::mt19937& rng) {
    cnn::ConvParams p(out, in);
    std::normal_distribution<float> d(0.0f, 0.05f);
    for (float& w : p.weights)
        w = d(rng);
    for (float& b : p.bias)
        b = d(rng);
    return p;
}

Plane random_plane(int w, int h, std::mt19937& rng) {
    Plane p(w, h);
    std::uniform_int_distribution<int> d(0, 1023);
    for (Sample& s : p.samples)
        s = static_cast<Sample>(d(rng));
    return p;
}

// One 64 -> 64 feature-map layer on a 96x96 block, the network's inner shape.
template <Tensor3 (*Conv)(const Tensor3&, const cnn::ConvParams&)>
void BM_conv(benchmark::State& state) {
    std::mt19937 rng(1);
    const int fm = static_cast<int>(state.range(0));
    const Tensor3 in = random_tensor(fm, 96, rng);
    const cnn::ConvParams p = random_conv(fm, fm, rng);
    for (auto _ : state)
        benchmark::DoNotOptimize(Conv(in, p));
    state.SetItemsProcessed(state.iterations() * 96 * 96 * fm * fm * 9);
}

// 1920x1080 luma, 2:1 down-sampling.
template <std::vector<double> (*Filter)(const Plane&, const FilterKernel&, const FilterKernel&)>
void BM_filter(benchmark::State& state) {
    std::mt19937 rng(2);
    const Plane p = random_plane(1920, 1080, rng);
    const auto h = make_lanczos3_downsample(1920, 960), v = make_lanczos3_downsample(1080, 540);
    for (auto _ : state)
        benchmark::DoNotOptimize(Filter(p, h, v));
    state.SetItemsProcessed(state.iterations() * 960 * 540);
}

} // namespace

BENCHMARK_TEMPLATE(BM_conv, reference::conv2d)->Name("conv2d/serial")->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_conv, cnn::conv2d)->Name("conv2d/openmp")->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_TEMPLATE(BM_filter, reference::filter_plane)->Name("filter_plane/serial")->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_filter, filter_plane)->Name("filter_plane/openmp")->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
