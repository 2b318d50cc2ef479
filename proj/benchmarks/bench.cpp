#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "rlvc/bdd.hpp"
#include "rlvc/environments.hpp"
#include "rlvc/feature_graph.hpp"
#include "rlvc/mdp.hpp"
#include "rlvc/rlvc.hpp"

using namespace rlvc;

namespace {

// Sparse random MDP: each (s, a) reaches four random successors.
FiniteMdp sparse_mdp(std::size_t n, std::size_t m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    FiniteMdp mdp(n, m, 0.9);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t a = 0; a < m; ++a) {
            Distribution row;
            double total = 0.0;
            for (int k = 0; k < 4; ++k) {
                row.emplace_back(pick(rng), u(rng) + 0.01);
                total += row.back().second;
            }
            for (auto& e : row) e.second /= total;
            mdp.set_transition(s, a, row);
            mdp.set_reward(s, a, u(rng) * 10.0);
        }
    return mdp;
}

void value_iteration(benchmark::State& state) {
    const auto mdp = sparse_mdp(static_cast<std::size_t>(state.range(0)), 4, 1);
    for (auto _ : state) benchmark::DoNotOptimize(solve_optimal_q(mdp));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(value_iteration)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

// (x0 & x_n) | (x1 & x_n+1) | ... built in the worst interleaved order, then sifted.
void bdd_build_and_sift(benchmark::State& state) {
    const auto n = static_cast<BddManager::Var>(state.range(0));
    for (auto _ : state) {
        BddManager m;
        for (BddManager::Var i = 0; i < 2 * n; ++i) m.var(i);  // fixes the bad order
        BddManager::Ref f = BddManager::zero;
        for (BddManager::Var i = 0; i < n; ++i) f = m.disj(f, m.conj(m.var(i), m.var(i + n)));
        std::vector<BddManager::Ref> roots{f};
        m.sift(roots);
        benchmark::DoNotOptimize(m.node_count(roots));
    }
}
BENCHMARK(bdd_build_and_sift)->DenseRange(4, 10, 2);

void composite_generation(benchmark::State& state) {
    const CarTask car(CarSpec{});
    const auto db = collect_interactions(car, {static_cast<std::size_t>(state.range(0)), 3, 0});
    const auto data = prepare_dataset(db, car.dictionary());
    const FeatureGraph graph(car.dictionary());
    const CompositeParams params;
    for (auto _ : state) benchmark::DoNotOptimize(generate_composites(data.percepts, graph, params));
}
BENCHMARK(composite_generation)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
