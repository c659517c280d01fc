// Serial vs OpenMP throughput of the grid Bellman sweep and table construction.

#include "imdp/bellman.hpp"

#include "../tests/support.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace imdp;

struct Fixture {
    Model model;
    ActionGrid grid;
    GridTable table;
    ValueVector v;

    Fixture(int n, int resolution)
        : model(testing::random_model(n, 2, 12345)),
          grid(model.base.action_box, resolution),
          table(model.base, grid) {
        std::mt19937_64 rng(1);
        v = testing::random_vector(n, 0.0, 20.0, rng);
    }
};

const Fixture& fixture(int n) {
    static Fixture small(16, 33), medium(64, 33), large(128, 33);
    return n <= 16 ? small : n <= 64 ? medium : large;
}

void BM_Sweep(benchmark::State& state, Exec exec) {
    const Fixture& f = fixture(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto r = g_sweep(Mode::pessimistic, f.v, f.table, f.model.base.gamma, exec);
        benchmark::DoNotOptimize(r.value.data());
    }
    state.SetItemsProcessed(state.iterations() * f.table.num_states() * static_cast<std::int64_t>(f.grid.size()));
}

void BM_Table(benchmark::State& state, Exec exec) {
    const Fixture& f = fixture(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        GridTable t(f.model.base, f.grid, exec);
        benchmark::DoNotOptimize(&t);
    }
}

}  // namespace

BENCHMARK_CAPTURE(BM_Sweep, serial, Exec::serial)->Arg(16)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Sweep, parallel, Exec::parallel)->Arg(16)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Table, serial, Exec::serial)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Table, parallel, Exec::parallel)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
