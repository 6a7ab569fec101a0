#include <benchmark/benchmark.h>

#include "dppo/curation.hpp"
#include "dppo/metaloop.hpp"
#include "dppo/policy.hpp"
#include "dppo/prefcheck.hpp"
#include "dppo/rng.hpp"
#include "dppo/taskgen.hpp"

namespace {

dppo::SuiteConfig bench_suite_config() {
    dppo::SuiteConfig config;
    config.seed = 11;
    config.samples_per_skill = 50;
    return config;
}

dppo::PolicyParams bench_params(const dppo::SampleSet& suite, std::uint64_t seed) {
    dppo::Rng rng(seed);
    dppo::PolicyParams params(suite.feature_dim(), suite.answer_count());
    for (double& v : params.theta.data) v = rng.normal(0.0, 0.3);
    return params;
}

void bm_generate_suite(benchmark::State& state) {
    dppo::SuiteConfig config = bench_suite_config();
    config.samples_per_skill = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(dppo::generate_suite(config));
    }
    state.SetItemsProcessed(state.iterations() * config.total_samples());
}
BENCHMARK(bm_generate_suite)->Arg(50)->Arg(200);

void bm_grad_log_prob(benchmark::State& state) {
    const dppo::SampleSet suite = dppo::generate_suite(bench_suite_config());
    const dppo::PolicyParams params = bench_params(suite, 21);
    dppo::Rng rng(22);
    const dppo::SampleInstance& sample = suite.samples().front();
    const dppo::StructuredResponse response = dppo::sample_response(params, sample, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dppo::grad_log_prob(params, sample, response));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_grad_log_prob);

void bm_grpo_step(benchmark::State& state) {
    const dppo::SampleSet suite = dppo::generate_suite(bench_suite_config());
    const dppo::PolicyParams params = bench_params(suite, 31);
    dppo::Rng rng(32);
    std::vector<dppo::RolloutGroup> groups;
    const std::vector<dppo::SampleId> ids = suite.embodied_ids();
    for (int g = 0; g < static_cast<int>(state.range(0)); ++g) {
        dppo::RolloutGroup group;
        group.sample = &suite.by_id(ids[static_cast<std::size_t>(g) % ids.size()]);
        for (int i = 0; i < 8; ++i) {
            group.responses.push_back(dppo::sample_response(params, *group.sample, rng));
            group.rewards.push_back(rng.uniform());
        }
        groups.push_back(std::move(group));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(dppo::grpo_step(params, groups, 0.05));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * 8);
}
BENCHMARK(bm_grpo_step)->Arg(16)->Arg(64);

void bm_rebalance(benchmark::State& state) {
    const dppo::SampleSet suite = dppo::generate_suite(bench_suite_config());
    const dppo::PolicyParams params = bench_params(suite, 41);
    dppo::DifficultyBuffer buffer(suite, dppo::StagnationConfig{});
    dppo::Rng rng(42);
    buffer.begin_round();
    for (const dppo::SampleInstance& sample : suite.samples()) {
        for (int t = 0; t < 8; ++t) {
            dppo::RolloutRecord record;
            record.sample_id = sample.id;
            record.response = dppo::sample_response(params, sample, rng);
            record.success = rng.bernoulli(0.4);
            buffer.log_rollout(record);
        }
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(buffer.rebalance());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(suite.size()));
}
BENCHMARK(bm_rebalance);

void bm_pl_ranking_prob(benchmark::State& state) {
    dppo::Rng rng(51);
    std::vector<double> rewards(static_cast<std::size_t>(state.range(0)));
    for (double& r : rewards) r = rng.normal(0.0, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dppo::pl_ranking_prob(rewards));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_pl_ranking_prob)->Arg(4)->Arg(16);

void bm_expected_success(benchmark::State& state) {
    const dppo::SampleSet suite = dppo::generate_suite(bench_suite_config());
    const dppo::PolicyParams params = bench_params(suite, 61);
    const dppo::RewardSpec spec;
    const std::vector<dppo::SampleId> ids = suite.ids();
    for (auto _ : state) {
        benchmark::DoNotOptimize(dppo::evaluate_success(spec, params, suite, ids));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ids.size()));
}
BENCHMARK(bm_expected_success);

}  // namespace

BENCHMARK_MAIN();
