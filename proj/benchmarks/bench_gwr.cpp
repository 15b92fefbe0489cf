// BMU search, learning steps and hierarchy forecasts.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "gwr/gwr_network.hpp"
#include "gwr/hierarchy.hpp"
#include "gwr/synthetic.hpp"

namespace {

using gwr::GwrNetwork;
using gwr::GwrParams;

std::vector<double> random_vec(std::size_t d, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> v(d);
    for (auto& x : v) x = n(rng);
    return v;
}

// Network grown to `neurons` prototypes on Gaussian data.
GwrNetwork grown(std::size_t neurons, std::size_t dim, std::mt19937_64& rng) {
    GwrParams p;
    p.activation_threshold = 0.999999;
    p.firing_threshold = 0.99;
    p.max_neurons = neurons;
    auto net = GwrNetwork::init(random_vec(dim, rng), random_vec(dim, rng), p);
    while (net.neuron_count() < neurons) net.train_step(random_vec(dim, rng));
    return net;
}

void BM_FindBmus(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const auto dim = static_cast<std::size_t>(state.range(1));
    const GwrNetwork net = grown(static_cast<std::size_t>(state.range(0)), dim, rng);
    std::vector<std::vector<double>> queries;
    for (int i = 0; i < 256; ++i) queries.push_back(random_vec(dim, rng));
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(net.find_bmus(queries[i++ % queries.size()]));
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_FindBmus)->ArgsProduct({{100, 1000, 3000}, {8, 24, 72}});

// Full scan without early exit, for comparison.
void BM_FindBmusNaive(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const auto dim = static_cast<std::size_t>(state.range(1));
    const GwrNetwork net = grown(static_cast<std::size_t>(state.range(0)), dim, rng);
    const auto& g = net.graph();
    std::vector<std::vector<double>> queries;
    for (int i = 0; i < 256; ++i) queries.push_back(random_vec(dim, rng));
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& q = queries[i++ % queries.size()];
        double best = 1e300, second = 1e300;
        std::size_t b = 0, s = 0;
        for (std::size_t k = 0; k < g.neuron_count(); ++k) {
            const auto w = g.row(k);
            double d = 0.0;
            for (std::size_t j = 0; j < dim; ++j) d += (q[j] - w[j]) * (q[j] - w[j]);
            if (d < best) {
                second = best;
                s = b;
                best = d;
                b = k;
            } else if (d < second) {
                second = d;
                s = k;
            }
        }
        benchmark::DoNotOptimize(b);
        benchmark::DoNotOptimize(s);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_FindBmusNaive)->ArgsProduct({{100, 1000, 3000}, {8, 24, 72}});

void BM_TrainStep(benchmark::State& state) {
    std::mt19937_64 rng(2);
    GwrNetwork net = grown(static_cast<std::size_t>(state.range(0)), 8, rng);
    GwrParams p = net.params();
    p.max_neurons = static_cast<std::size_t>(state.range(0));
    net.mutable_graph().set_params(p);
    std::vector<std::vector<double>> inputs;
    for (int i = 0; i < 1024; ++i) inputs.push_back(random_vec(8, rng));
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(net.train_step(inputs[i++ % inputs.size()]));
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TrainStep)->Arg(100)->Arg(1000);

void BM_Forecast(benchmark::State& state) {
    const gwr::MotionPattern wave{gwr::PatternShape::Wave, gwr::ArmSide::Both};
    const auto train = gwr::FrameSeries::from(gwr::generate_synthetic(wave, 0.1, 0.002, 10.0, 1));
    const auto test = gwr::FrameSeries::from(gwr::generate_synthetic(wave, 0.1, 0.002, 10.0, 2));
    gwr::Hierarchy h{gwr::HierarchyConfig{}};
    h.train_on_sequence(train, 20);
    const auto horizon = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(h.forecast(test, horizon));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(test.size()));
}
BENCHMARK(BM_Forecast)->Arg(1)->Arg(6)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
