#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dppo/prefcheck.hpp"
#include "dppo/rng.hpp"
#include "dppo/taskgen.hpp"
#include "oracles.hpp"

using namespace dppo;

namespace {

SuiteConfig tiny_config() {
    SuiteConfig cfg;
    cfg.samples_per_skill = 12;
    return cfg;
}

PolicyParams random_params(const SampleSet& suite, Rng& rng, double scale = 0.5) {
    PolicyParams params(suite.feature_dim(), suite.answer_count());
    for (double& v : params.theta.data) v = rng.normal(0.0, scale);
    return params;
}

}  // namespace

TEST_CASE("ranking probability matches the direct product formula") {
    Rng rng(97);
    for (int trial = 0; trial < 500; ++trial) {
        const int k = 2 + rng.index(5);
        std::vector<double> rewards;
        for (int i = 0; i < k; ++i) rewards.push_back(rng.uniform(-3.0, 3.0));
        const double direct = oracle::pl_prob(rewards);
        CHECK(pl_ranking_prob(rewards) == doctest::Approx(direct).epsilon(1e-10));
        CHECK(log_pl_ranking(rewards) == doctest::Approx(std::log(direct)).epsilon(1e-10));
    }
}

TEST_CASE("ranking probability is invariant under common reward shifts") {
    Rng rng(101);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = 2 + rng.index(4);
        std::vector<double> rewards, shifted;
        const double shift = rng.uniform(-50.0, 50.0);
        for (int i = 0; i < k; ++i) {
            rewards.push_back(rng.uniform(-2.0, 2.0));
            shifted.push_back(rewards.back() + shift);
        }
        CHECK(log_pl_ranking(rewards) == doctest::Approx(log_pl_ranking(shifted)).epsilon(1e-9));
    }
}

TEST_CASE("ranking probabilities over all orderings sum to one") {
    Rng rng(103);
    for (int k = 2; k <= 5; ++k) {
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> rewards;
            for (int i = 0; i < k; ++i) rewards.push_back(rng.uniform(-3.0, 3.0));
            // Library-side enumeration and an independent brute-force one.
            CHECK(std::abs(pl_normalization_check(rewards, k) - 1.0) <= 1e-9);
            CHECK(std::abs(oracle::pl_enumeration_sum(rewards) - 1.0) <= 1e-9);
        }
    }
    CHECK_THROWS_AS(pl_normalization_check(std::vector<double>(7, 0.0), 7), ContractError);
}

TEST_CASE("implicit reward vanishes identically at the reference policy") {
    const SampleSet suite = generate_suite(tiny_config());
    Rng rng(107);
    for (int trial = 0; trial < 100; ++trial) {
        const PolicyParams params = random_params(suite, rng);
        const PolicyParams ref = snapshot_reference(params);
        const SampleInstance& s =
            suite.samples()[static_cast<std::size_t>(rng.index(static_cast<int>(suite.size())))];
        const StructuredResponse r = sample_response(params, s, rng);
        CHECK(implicit_reward(params, ref, s, r, 1.0) == 0.0);  // exactly zero
        CHECK(implicit_reward(params, ref, s, r, 7.5) == 0.0);
    }
}

TEST_CASE("implicit reward is the scaled log-probability ratio") {
    const SampleSet suite = generate_suite(tiny_config());
    Rng rng(109);
    for (int trial = 0; trial < 100; ++trial) {
        const PolicyParams params = random_params(suite, rng);
        const PolicyParams ref = random_params(suite, rng);
        const SampleInstance& s =
            suite.samples()[static_cast<std::size_t>(rng.index(static_cast<int>(suite.size())))];
        const StructuredResponse r = sample_response(params, s, rng);
        const double beta = rng.uniform(0.1, 5.0);
        const double expected = beta * (log_prob(params, s, r) - log_prob(ref, s, r));
        CHECK(implicit_reward(params, ref, s, r, beta) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("the expert branch of the unified objective is supervised learning") {
    const SampleSet suite = generate_suite(tiny_config());
    Rng rng(113);
    for (int trial = 0; trial < 20; ++trial) {
        const PolicyParams params = random_params(suite, rng);
        std::vector<ExpertTrajectory> batch;
        const int n = 1 + rng.index(12);
        for (int i = 0; i < n; ++i) {
            const SampleInstance& s = suite.samples()[static_cast<std::size_t>(
                rng.index(static_cast<int>(suite.size())))];
            batch.push_back({s.id, teacher_solve(s).response});
        }
        const EquivalenceReport report = sft_pl_equivalence_check(params, suite, batch);
        CHECK(report.pass);
        CHECK(report.max_abs_gradient_diff <= 1e-10);
    }
}

TEST_CASE("the unified objective scores both evidence kinds") {
    const SampleSet suite = generate_suite(tiny_config());
    Rng rng(127);
    const PolicyParams params = random_params(suite, rng);
    const PolicyParams ref = random_params(suite, rng);
    const double beta = 1.3;

    // Expert-only dataset: the objective is the mean log-likelihood.
    std::vector<PreferenceSample> experts;
    double direct = 0.0;
    for (int i = 0; i < 10; ++i) {
        const SampleInstance& s =
            suite.samples()[static_cast<std::size_t>(rng.index(static_cast<int>(suite.size())))];
        const ExpertTrajectory t{s.id, teacher_solve(s).response};
        experts.emplace_back(t);
        direct += log_prob(params, s, t.response);
    }
    CHECK(upl_objective(params, ref, suite, experts, beta) ==
          doctest::Approx(direct / 10.0).epsilon(1e-12));

    // Ranked-list dataset: the objective is the mean Plackett-Luce
    // log-probability over implicit rewards.
    std::vector<PreferenceSample> rankings;
    double direct_pl = 0.0;
    for (int i = 0; i < 10; ++i) {
        const SampleInstance& s =
            suite.samples()[static_cast<std::size_t>(rng.index(static_cast<int>(suite.size())))];
        RankedList list;
        list.sample_id = s.id;
        std::vector<double> rewards;
        for (int j = 0; j < 4; ++j) {
            const StructuredResponse r = sample_response(params, s, rng);
            list.ranked.push_back(r);
            rewards.push_back(implicit_reward(params, ref, s, r, beta));
        }
        rankings.emplace_back(list);
        direct_pl += std::log(oracle::pl_prob(rewards));
    }
    CHECK(upl_objective(params, ref, suite, rankings, beta) ==
          doctest::Approx(direct_pl / 10.0).epsilon(1e-9));
}

TEST_CASE("the bundled verification battery passes and is deterministic") {
    const auto rows = run_prefcheck_suite(4242);
    CHECK(!rows.empty());
    for (const auto& row : rows) {
        INFO(row.name);
        CHECK(row.pass);
    }
    const auto rerun = run_prefcheck_suite(4242);
    REQUIRE(rerun.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].name == rerun[i].name);
        CHECK(rows[i].statistic == rerun[i].statistic);
    }
}
