// Serial reference vs OpenMP kernels. Run with OMP_NUM_THREADS set to compare
// thread counts; the outputs are identical by construction.

#include <benchmark/benchmark.h>

#include "vlnaug/action_predictor.hpp"
#include "vlnaug/mse_kernels.hpp"
#include "vlnaug/rng.hpp"

namespace {

vlnaug::FrameImage random_frame(int w, int h, vlnaug::Rng& rng) {
    std::vector<float> px(static_cast<std::size_t>(w) * h * 3);
    for (auto& v : px) v = static_cast<float>(rng.uniform01());
    return vlnaug::FrameImage(w, h, 3, std::move(px));
}

void BM_MseSerial(benchmark::State& state) {
    vlnaug::Rng rng(1);
    const int w = static_cast<int>(state.range(0));
    const auto a = random_frame(w, w / 2, rng), b = random_frame(w, w / 2, rng);
    const auto layout = vlnaug::layout_windows({0, w * 5 / 6}, w * 2 / 9);
    for (auto _ : state) benchmark::DoNotOptimize(vlnaug::kernels::windowed_mse_serial(a, b, layout));
}

void BM_MseParallel(benchmark::State& state) {
    vlnaug::Rng rng(1);
    const int w = static_cast<int>(state.range(0));
    const auto a = random_frame(w, w / 2, rng), b = random_frame(w, w / 2, rng);
    const auto layout = vlnaug::layout_windows({0, w * 5 / 6}, w * 2 / 9);
    for (auto _ : state) benchmark::DoNotOptimize(vlnaug::kernels::windowed_mse_parallel(a, b, layout));
}

std::vector<vlnaug::FrameImage> sequence(int n, int w) {
    vlnaug::Rng rng(2);
    std::vector<vlnaug::FrameImage> frames;
    for (int i = 0; i < n; ++i) frames.push_back(random_frame(w, w / 4, rng));
    return frames;
}

void BM_SequenceSerial(benchmark::State& state) {
    const auto frames = sequence(40, static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(vlnaug::predict_sequence_serial(frames, {}));
}

void BM_SequenceParallel(benchmark::State& state) {
    const auto frames = sequence(40, static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(vlnaug::predict_sequence(frames, {}));
}

}  // namespace

BENCHMARK(BM_MseSerial)->Arg(360)->Arg(1080)->Arg(2160);
BENCHMARK(BM_MseParallel)->Arg(360)->Arg(1080)->Arg(2160);
BENCHMARK(BM_SequenceSerial)->Arg(360)->Arg(1080);
BENCHMARK(BM_SequenceParallel)->Arg(360)->Arg(1080);

BENCHMARK_MAIN();
