#include <benchmark/benchmark.h>

#include "cascade_emp/fisher.hpp"
#include "cascade_emp/monte_carlo.hpp"
#include "cascade_emp/ranking.hpp"
#include "cascade_emp/reference.hpp"

using namespace cascade_emp;

namespace
{

CascadeNetwork network(std::size_t n)
{
    Rng rng(12345);
    std::vector<ParamModule> mods;
    for (std::size_t k = 1; k < n; ++k)
        mods.push_back(sample_second_order(rng));
    return CascadeNetwork(std::move(mods));
}

std::size_t horizon(const std::vector<TransferFunction>& fs)
{
    std::size_t len = 1;
    for (const auto& f : fs)
        len = std::max(len, impulse_response(f).taps.size());
    return len;
}

void BM_WhiteCorrelation(benchmark::State& state)
{
    const auto net = network(static_cast<std::size_t>(state.range(0)));
    const auto stack = gradient_stack(net, 1, net.node_count()).flatten();
    const int threads = static_cast<int>(state.range(1));
    for (auto _ : state)
        benchmark::DoNotOptimize(white_correlation(stack, stack, 1.0, {}, threads));
}

void BM_WhiteCorrelationReference(benchmark::State& state)
{
    const auto net = network(static_cast<std::size_t>(state.range(0)));
    const auto stack = gradient_stack(net, 1, net.node_count()).flatten();
    const std::size_t len = horizon(stack);
    for (auto _ : state)
        benchmark::DoNotOptimize(reference::white_correlation(stack, stack, 1.0, len));
}

void BM_RankEmps(benchmark::State& state)
{
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const auto net = network(n);
    const auto profile = VarianceProfile::uniform(n, 1.0, 0.01);
    const int threads = static_cast<int>(state.range(1));
    for (auto _ : state)
        benchmark::DoNotOptimize(rank_emps(net, profile, CriterionKind::Trace, {}, threads));
}

void BM_RankEmpsReference(benchmark::State& state)
{
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const auto net = network(n);
    const auto profile = VarianceProfile::uniform(n, 1.0, 0.01);
    for (auto _ : state)
        benchmark::DoNotOptimize(reference::criterion_values(net, profile, CriterionKind::Trace));
}

void BM_RunScenario(benchmark::State& state)
{
    ScenarioConfig cfg;
    cfg.n = 5;
    cfg.runs = 64;
    cfg.threads = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(run_scenario(cfg));
}

} // namespace

BENCHMARK(BM_WhiteCorrelation)->ArgsProduct({{4, 6}, {1, 0}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_WhiteCorrelationReference)->Arg(4)->Arg(6)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_RankEmps)->ArgsProduct({{4, 6}, {1, 0}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RankEmpsReference)->Arg(4)->Arg(6)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RunScenario)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
