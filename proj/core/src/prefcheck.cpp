#include "dppo/prefcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dppo/rng.hpp"

namespace dppo {
namespace {

constexpr std::uint64_t kTagPrefRewards = 0x70726566'72657764ULL;
constexpr std::uint64_t kTagPrefParams = 0x70726566'70726dULL;
constexpr std::uint64_t kTagPrefGroups = 0x70726566'67727073ULL;
constexpr std::uint64_t kTagPrefBatch = 0x70726566'62746368ULL;

double suffix_logsumexp(const std::vector<double>& rewards, std::size_t start) {
    double m = rewards[start];
    for (std::size_t j = start + 1; j < rewards.size(); ++j) m = std::max(m, rewards[j]);
    double acc = 0.0;
    for (std::size_t j = start; j < rewards.size(); ++j) acc += std::exp(rewards[j] - m);
    return m + std::log(acc);
}

Matrix random_matrix(int rows, int cols, Rng& rng, double sigma) {
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m.at(r, c) = rng.normal(0.0, sigma);
    return m;
}

}  // namespace

double implicit_reward(const PolicyParams& params, const PolicyParams& ref,
                       const SampleInstance& sample, const StructuredResponse& response,
                       double beta) {
    return beta * (log_prob(params, sample, response) - log_prob(ref, sample, response));
}

double log_pl_ranking(const std::vector<double>& rewards) {
    if (rewards.empty()) throw ContractError("log_pl_ranking: empty reward list");
    double total = 0.0;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        total += rewards[i] - suffix_logsumexp(rewards, i);
    }
    return total;
}

double pl_ranking_prob(const std::vector<double>& rewards) {
    return std::exp(log_pl_ranking(rewards));
}

double upl_objective(const PolicyParams& params, const PolicyParams& ref, const SampleSet& suite,
                     const std::vector<PreferenceSample>& dataset, double beta) {
    if (dataset.empty()) throw ContractError("upl_objective: empty dataset");
    double total = 0.0;
    for (const PreferenceSample& item : dataset) {
        if (std::holds_alternative<ExpertTrajectory>(item)) {
            const auto& traj = std::get<ExpertTrajectory>(item);
            total += log_prob(params, suite.by_id(traj.sample_id), traj.response);
        } else {
            const auto& ranking = std::get<RankedList>(item);
            if (ranking.ranked.empty()) throw ContractError("upl_objective: empty ranked list");
            const SampleInstance& sample = suite.by_id(ranking.sample_id);
            std::vector<double> rewards;
            rewards.reserve(ranking.ranked.size());
            for (const StructuredResponse& response : ranking.ranked) {
                rewards.push_back(implicit_reward(params, ref, sample, response, beta));
            }
            total += log_pl_ranking(rewards);
        }
    }
    return total / static_cast<double>(dataset.size());
}

EquivalenceReport sft_pl_equivalence_check(const PolicyParams& params, const SampleSet& suite,
                                           const std::vector<ExpertTrajectory>& batch,
                                           double tolerance) {
    if (batch.empty()) throw ContractError("sft_pl_equivalence_check: empty batch");

    // Preference-learning side: the expert-trajectory branch contributes the
    // plain log-likelihood, so its batch-sum gradient is sum_i grad log pi.
    Matrix pref_side(params.theta.rows, params.theta.cols);
    SftBatch sft;
    sft.reserve(batch.size());
    for (const ExpertTrajectory& traj : batch) {
        const SampleInstance& sample = suite.by_id(traj.sample_id);
        pref_side.add_scaled(grad_log_prob(params, sample, traj.response), 1.0);
        sft.emplace_back(&sample, traj.response);
    }

    // Supervised side, through the training code path: batch_nll_gradient is
    // the mean of -grad log pi, so -n * nll_grad is the same batch sum.
    const Matrix nll = batch_nll_gradient(params, sft);
    const double n = static_cast<double>(batch.size());

    EquivalenceReport report;
    for (std::size_t i = 0; i < pref_side.data.size(); ++i) {
        const double diff = std::fabs(pref_side.data[i] - (-n) * nll.data[i]);
        report.max_abs_gradient_diff = std::max(report.max_abs_gradient_diff, diff);
    }
    report.pass = report.max_abs_gradient_diff <= tolerance;
    return report;
}

double pl_normalization_check(const std::vector<double>& rewards_by_item, int k) {
    if (k < 1 || k > 6) {
        throw ContractError("pl_normalization_check: k must be in [1, 6] (k! enumeration)");
    }
    if (static_cast<int>(rewards_by_item.size()) != k) {
        throw ContractError("pl_normalization_check: reward list size does not match k");
    }
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> arranged(static_cast<std::size_t>(k));
    double total = 0.0;
    do {
        for (int i = 0; i < k; ++i) arranged[static_cast<std::size_t>(i)] =
            rewards_by_item[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
        total += pl_ranking_prob(arranged);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return total;
}

std::vector<CheckRow> run_prefcheck_suite(std::uint64_t seed) {
    std::vector<CheckRow> rows;
    const auto add = [&rows](const std::string& name, double statistic, double threshold) {
        rows.push_back({name, statistic, threshold, statistic <= threshold});
    };

    // Plackett-Luce normalization over all k! orderings.
    for (int k = 2; k <= 5; ++k) {
        Rng rng(derive_seed(seed, kTagPrefRewards, static_cast<std::uint64_t>(k)));
        std::vector<double> rewards(static_cast<std::size_t>(k));
        for (double& r : rewards) r = rng.normal(0.0, 2.0);
        const double sum = pl_normalization_check(rewards, k);
        add("pl_normalization_k" + std::to_string(k), std::fabs(sum - 1.0), 1e-9);
    }

    // Invariance under a common reward shift.
    {
        Rng rng(derive_seed(seed, kTagPrefRewards, 99));
        std::vector<double> rewards(4);
        for (double& r : rewards) r = rng.normal(0.0, 2.0);
        std::vector<double> shifted = rewards;
        for (double& r : shifted) r += 137.25;
        add("pl_shift_invariance", std::fabs(log_pl_ranking(rewards) - log_pl_ranking(shifted)),
            1e-9);
    }

    // The modal ranking is the reward-descending order.
    {
        Rng rng(derive_seed(seed, kTagPrefRewards, 100));
        std::vector<double> rewards(4);
        for (double& r : rewards) r = rng.normal(0.0, 1.5);
        std::vector<int> perm = {0, 1, 2, 3};
        double best = 0.0;
        std::vector<double> arranged(4);
        do {
            for (int i = 0; i < 4; ++i) arranged[static_cast<std::size_t>(i)] =
                rewards[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
            best = std::max(best, pl_ranking_prob(arranged));
        } while (std::next_permutation(perm.begin(), perm.end()));
        std::vector<double> descending = rewards;
        std::sort(descending.begin(), descending.end(), std::greater<double>());
        add("pl_modal_order", best - pl_ranking_prob(descending), 1e-12);
    }

    // A small suite + random parameters for the policy-coupled checks.
    SuiteConfig suite_config;
    suite_config.seed = derive_seed(seed, kTagPrefBatch, 1);
    suite_config.samples_per_skill = 12;
    const SampleSet suite = generate_suite(suite_config);

    Rng prng(derive_seed(seed, kTagPrefParams));
    PolicyParams params(suite.feature_dim(), suite.answer_count());
    params.theta = random_matrix(suite.feature_dim(), suite.answer_count() + 1, prng, 0.3);

    // Expert-trajectory branch == supervised fine-tuning gradient.
    {
        std::vector<ExpertTrajectory> batch;
        const std::vector<SampleId> embodied = suite.embodied_ids();
        for (std::size_t i = 0; i < 10 && i < embodied.size(); ++i) {
            batch.push_back({embodied[i], teacher_solve(suite.by_id(embodied[i])).response});
        }
        for (std::size_t i = 10; i < 15 && i < embodied.size(); ++i) {
            const SampleInstance& sample = suite.by_id(embodied[i]);
            StructuredResponse off;
            off.format_ok = true;
            const int alt = (sample.gold + 1) % suite.answer_count();
            if (skill_is_numeric(sample.skill)) {
                off.answer = sample.answer_values[static_cast<std::size_t>(alt)];
            } else {
                off.answer = alt;
            }
            batch.push_back({embodied[i], off});
        }
        const EquivalenceReport report = sft_pl_equivalence_check(params, suite, batch);
        add("sft_branch_equals_nll_gradient", report.max_abs_gradient_diff, 1e-10);
    }

    // Implicit reward vanishes identically at theta == theta_ref.
    {
        const PolicyParams ref = snapshot_reference(params);
        Rng rng(derive_seed(seed, kTagPrefBatch, 2));
        double worst = 0.0;
        const std::vector<SampleId> ids = suite.ids();
        for (int i = 0; i < 20; ++i) {
            const std::size_t pick = rng.below(ids.size());
            const SampleInstance& sample = suite.by_id(ids[pick]);
            const StructuredResponse response = sample_response(params, sample, rng);
            worst = std::max(worst,
                             std::fabs(implicit_reward(params, ref, sample, response, 1.0)));
        }
        add("implicit_reward_zero_at_ref", worst, 0.0);
    }

    // Linear scaling in beta (exact for beta a power of two).
    {
        PolicyParams ref = snapshot_reference(params);
        ref.theta.at(0, 0) += 0.25;
        Rng rng(derive_seed(seed, kTagPrefBatch, 3));
        double worst = 0.0;
        const std::vector<SampleId> ids = suite.ids();
        for (int i = 0; i < 20; ++i) {
            const std::size_t pick = rng.below(ids.size());
            const SampleInstance& sample = suite.by_id(ids[pick]);
            const StructuredResponse response = sample_response(params, sample, rng);
            const double once = implicit_reward(params, ref, sample, response, 1.0);
            const double twice = implicit_reward(params, ref, sample, response, 2.0);
            worst = std::max(worst, std::fabs(twice - 2.0 * once));
        }
        add("implicit_reward_beta_scaling", worst, 0.0);
    }

    // Group-standardized weights are mean-zero; degenerate groups do nothing.
    {
        Rng rng(derive_seed(seed, kTagPrefGroups));
        double worst_mean = 0.0;
        for (int g = 0; g < 50; ++g) {
            const std::size_t n = 2 + rng.index(8);
            std::vector<double> rewards(n);
            for (double& r : rewards) r = rng.normal(0.0, 1.0);
            const std::vector<double> w = group_weights(rewards);
            const double mean = std::accumulate(w.begin(), w.end(), 0.0) /
                                static_cast<double>(n);
            worst_mean = std::max(worst_mean, std::fabs(mean));
        }
        add("group_weights_mean_zero", worst_mean, 1e-9);

        const std::vector<SampleId> ids = suite.embodied_ids();
        std::vector<RolloutGroup> groups;
        for (int g = 0; g < 4; ++g) {
            RolloutGroup group;
            group.sample = &suite.by_id(ids[static_cast<std::size_t>(g)]);
            for (int i = 0; i < 5; ++i) {
                group.responses.push_back(sample_response(params, *group.sample, rng));
                group.rewards.push_back(0.35);
            }
            groups.push_back(std::move(group));
        }
        const PolicyParams stepped = grpo_step(params, groups, 0.5);
        double worst = 0.0;
        for (std::size_t i = 0; i < stepped.theta.data.size(); ++i) {
            worst = std::max(worst, std::fabs(stepped.theta.data[i] - params.theta.data[i]));
        }
        add("degenerate_group_zero_update", worst, 0.0);
    }

    // One supervised step on expert data must not decrease the unified
    // objective restricted to the expert branch.
    {
        std::vector<ExpertTrajectory> batch;
        std::vector<PreferenceSample> dataset;
        SftBatch sft;
        const std::vector<SampleId> embodied = suite.embodied_ids();
        for (std::size_t i = 0; i < 12 && i < embodied.size(); ++i) {
            const ExpertTrajectory traj{embodied[i],
                                        teacher_solve(suite.by_id(embodied[i])).response};
            batch.push_back(traj);
            dataset.emplace_back(traj);
            sft.emplace_back(&suite.by_id(traj.sample_id), traj.response);
        }
        const PolicyParams ref = snapshot_reference(params);
        const double before = upl_objective(params, ref, suite, dataset, 1.0);
        const PolicyParams after_params = sft_step(params, sft, 1e-3);
        const double after = upl_objective(after_params, ref, suite, dataset, 1.0);
        add("upl_ascent_under_sft_step", before - after, 0.0);
    }

    return rows;
}

}  // namespace dppo
