// SPDX-License-Identifier: Apache-2.0
//
// Serial reference kernels against their OpenMP counterparts.

#include "pixrect/matching.hpp"
#include "pixrect/mom.hpp"

#include <benchmark/benchmark.h>

using namespace pixrect;

namespace {

WireMesh board_mesh(int n)
{
    BoardSpec board;
    PixelGrid g(n, n, std::min(board.W_p, board.L_p) / n);
    return mesh(decode_layout(g, BitVector(g.free_count(), 1)), board, 3e9);
}

void BM_Assemble(benchmark::State& st, bool parallel)
{
    const auto m = board_mesh(static_cast<int>(st.range(0)));
    const auto model = mom::build_model(m, {m.feed});
    const auto med = mom::medium(2.5e9, 2.275);
    const auto rule = mom::gauss_legendre(8);
    for (auto _ : st) {
        auto A = parallel ? mom::assemble_parallel(model, med, rule) : mom::assemble_reference(model, med, rule);
        benchmark::DoNotOptimize(A.data());
    }
    st.counters["bases"] = static_cast<double>(model.bases.size());
}

void BM_Radiate(benchmark::State& st, bool parallel)
{
    const auto m = board_mesh(static_cast<int>(st.range(0)));
    const auto model = mom::build_model(m, {m.feed});
    const auto med = mom::medium(2.5e9, 2.275);
    std::vector<cplx> J(model.pieces.size(), cplx(1.0, 0.5));
    std::vector<double> th, ph;
    for (int i = 0; i <= 36; ++i)
        th.push_back(i * kPi / 36);
    for (int j = 0; j < 72; ++j)
        ph.push_back(j * kPi / 36);
    for (auto _ : st) {
        auto r = parallel ? mom::radiate_parallel(model, J, med, th, ph) : mom::radiate_reference(model, J, med, th, ph);
        benchmark::DoNotOptimize(r.e_theta.data());
    }
}

void BM_Population(benchmark::State& st, bool parallel)
{
    BoardSpec board;
    const int n = static_cast<int>(st.range(0));
    AntennaCost::Context ctx{PixelGrid(n, n, std::min(board.W_p, board.L_p) / n), board, MeshOptions{},
                             SolverOptions{}, 3e9, 0.0};
    BpsoConfig cfg;
    cfg.population = 8;
    const auto swarm = init(cfg, ctx.grid.free_count());
    for (auto _ : st) {
        // A fresh memo each round so every particle is solved.
        st.PauseTiming();
        AntennaCost cost(ctx, CostSpec{});
        std::vector<std::string> failures;
        st.ResumeTiming();
        auto c = parallel ? evaluate_population_parallel(cost, swarm.positions, failures)
                          : evaluate_population_reference(cost, swarm.positions, failures);
        benchmark::DoNotOptimize(c.data());
    }
}

} // namespace

BENCHMARK_CAPTURE(BM_Assemble, reference, false)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Assemble, parallel, true)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Radiate, reference, false)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Radiate, parallel, true)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Population, reference, false)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Population, parallel, true)->Arg(6)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
