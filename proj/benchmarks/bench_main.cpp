#include "regenfeel/blending.hpp"
#include "regenfeel/harness.hpp"
#include "regenfeel/maps.hpp"
#include "regenfeel/sea.hpp"

#include <benchmark/benchmark.h>

using namespace regenfeel;

static void BM_FeelCurve(benchmark::State& state)
{
    const maps::MapParams p;
    double f = 0.0;
    for (auto _ : state) {
        f += 10.0;
        if (f > 9000.0) {
            f = 0.0;
        }
        benchmark::DoNotOptimize(maps::brakeforce_to_pedal_force(f, p));
    }
}
BENCHMARK(BM_FeelCurve);

static void BM_TwoPedalBlend(benchmark::State& state)
{
    const maps::MapParams p;
    double x = 0.0;
    for (auto _ : state) {
        x = x >= 79.0 ? 0.0 : x + 0.5;
        benchmark::DoNotOptimize(blend::distribute_two_pedal(maps::PedalDisplacement(x), 8.0, p));
    }
}
BENCHMARK(BM_TwoPedalBlend);

static void BM_RigWorldTick(benchmark::State& state)
{
    sea::PedalRig rig(sea::SeaPlantParams{}, sea::CascadedGains{});
    double mm = 0.0;
    for (auto _ : state) {
        mm = mm >= 40.0 ? 0.0 : mm + 0.01;
        benchmark::DoNotOptimize(rig.advance(mm, 30.0, 5.0, 0.001));
    }
}
BENCHMARK(BM_RigWorldTick);

static void BM_FullTrial(benchmark::State& state)
{
    ExperimentConfig c;
    c.condition.pedal_mode = state.range(0) == 0 ? blend::PedalMode::TwoPedal : blend::PedalMode::OnePedal;
    for (auto _ : state) {
        auto r = harness::run_trial(c, 1);
        benchmark::DoNotOptimize(r.metrics);
        state.counters["sim_s"] = r.trace.rows.back().t;
    }
}
BENCHMARK(BM_FullTrial)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
