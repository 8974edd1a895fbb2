// Serial references against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <vector>

#include "psfcp/experiment.hpp"
#include "psfcp/rng.hpp"
#include "psfcp/robust_calibration.hpp"

namespace {

std::vector<psfcp::CharacterizationVector> random_vectors(std::size_t clients, std::size_t bins) {
    psfcp::Rng rng(11);
    const auto spec = psfcp::HistogramSpec::uniform(bins, 1.0);
    std::vector<psfcp::CharacterizationVector> out;
    for (std::size_t k = 0; k < clients; ++k) {
        std::vector<double> s(200);
        for (auto& x : s) x = rng.uniform();
        out.push_back(psfcp::characterize_normalized(s, k, spec));
    }
    return out;
}

void BM_Distances_Serial(benchmark::State& state) {
    const auto v = random_vectors(static_cast<std::size_t>(state.range(0)), 100);
    for (auto _ : state) benchmark::DoNotOptimize(psfcp::pairwise_distances_serial(v));
}

void BM_Distances_Parallel(benchmark::State& state) {
    const auto v = random_vectors(static_cast<std::size_t>(state.range(0)), 100);
    for (auto _ : state) benchmark::DoNotOptimize(psfcp::pairwise_distances(v));
}

psfcp::ExperimentConfig bench_config() {
    psfcp::ExperimentConfig cfg;
    cfg.training.rounds = 300;
    cfg.n_trials = 4;
    cfg.attack.calibration = psfcp::CalibrationAttack::coverage();
    return cfg;
}

void BM_Experiment_Serial(benchmark::State& state) {
    const auto cfg = bench_config();
    for (auto _ : state) benchmark::DoNotOptimize(psfcp::run_experiment_serial(cfg));
}

void BM_Experiment_Parallel(benchmark::State& state) {
    const auto cfg = bench_config();
    for (auto _ : state) benchmark::DoNotOptimize(psfcp::run_experiment(cfg));
}

}  // namespace

BENCHMARK(BM_Distances_Serial)->Arg(100)->Arg(400);
BENCHMARK(BM_Distances_Parallel)->Arg(100)->Arg(400);
BENCHMARK(BM_Experiment_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Experiment_Parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
