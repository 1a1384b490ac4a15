// Serial reference vs OpenMP Bellman sweep on joint models of growing size.

#include "lbw/mdp.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

#include <cmath>

using namespace lbw;

namespace {

JointMdp model(int K, int B)
{
    const std::vector<ServerParams> all{ServerParams::lps(3, 0.3), ServerParams::ps(0.5), ServerParams::fcfs(0.4)};
    std::vector<ServerParams> s(all.begin(), all.begin() + K);
    std::vector<CostSpec> c(K, Linear{1});
    return build_joint_mdp(s, 0.6, c, BlockingCost::finite(50), std::vector<int>(K, B));
}

std::vector<double> start(const JointMdp& m)
{
    std::vector<double> v(m.n_states);
    for (std::size_t s = 0; s < m.n_states; ++s)
        v[s] = std::sin(0.01 * s);
    return v;
}

void BM_SweepReference(benchmark::State& st)
{
    const auto m = model(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
    auto v = start(m);
    std::vector<double> out(m.n_states);
    for (auto _ : st) {
        bellman_sweep_reference(m, v, out, nullptr);
        benchmark::DoNotOptimize(out.data());
    }
    st.counters["states"] = static_cast<double>(m.n_states);
    st.SetItemsProcessed(st.iterations() * static_cast<long>(m.n_states));
}

void BM_SweepParallel(benchmark::State& st)
{
    const auto m = model(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
    omp_set_num_threads(static_cast<int>(st.range(2)));
    auto v = start(m);
    std::vector<double> out(m.n_states);
    for (auto _ : st) {
        bellman_sweep(m, v, out, nullptr);
        benchmark::DoNotOptimize(out.data());
    }
    st.counters["states"] = static_cast<double>(m.n_states);
    st.counters["threads"] = static_cast<double>(st.range(2));
    st.SetItemsProcessed(st.iterations() * static_cast<long>(m.n_states));
}

} // namespace

BENCHMARK(BM_SweepReference)->Args({2, 100})->Args({2, 400})->Args({3, 40})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepParallel)
    ->ArgsProduct({{2}, {100, 400}, {1, 2, 4}})
    ->ArgsProduct({{3}, {40}, {1, 2, 4}})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();
