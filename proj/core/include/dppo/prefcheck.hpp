#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "dppo/policy.hpp"
#include "dppo/taskgen.hpp"

namespace dppo {

// A preference observation: either a single expert trajectory (supervised
// evidence) or a full ranking of candidate responses (comparative evidence).
struct ExpertTrajectory {
    SampleId sample_id = 0;
    StructuredResponse response;
};

struct RankedList {
    SampleId sample_id = 0;
    std::vector<StructuredResponse> ranked;  // best first
};

using PreferenceSample = std::variant<ExpertTrajectory, RankedList>;

// beta * (log pi_theta(response) - log pi_ref(response)). Exactly zero when
// params == ref.
double implicit_reward(const PolicyParams& params, const PolicyParams& ref,
                       const SampleInstance& sample, const StructuredResponse& response,
                       double beta);

// Plackett-Luce probability of observing `rewards` in the given order:
// prod_i exp(r_i) / sum_{j >= i} exp(r_j), evaluated with max-shifted
// log-sum-exp. Invariant under a common shift of all rewards.
double log_pl_ranking(const std::vector<double>& rewards);
double pl_ranking_prob(const std::vector<double>& rewards);

// Mean over the dataset of log P(observation | params): expert trajectories
// contribute their direct log-likelihood; ranked lists contribute the
// Plackett-Luce log-probability over implicit rewards against `ref`.
double upl_objective(const PolicyParams& params, const PolicyParams& ref, const SampleSet& suite,
                     const std::vector<PreferenceSample>& dataset, double beta);

struct EquivalenceReport {
    double max_abs_gradient_diff = 0.0;
    bool pass = false;
};

// Verifies that the expert-trajectory branch of the unified objective is
// supervised fine-tuning: its batch-sum gradient must equal the negated
// batch NLL gradient used by sft_step (computed through that code path)
// entrywise within `tolerance`.
EquivalenceReport sft_pl_equivalence_check(const PolicyParams& params, const SampleSet& suite,
                                           const std::vector<ExpertTrajectory>& batch,
                                           double tolerance = 1e-10);

// Sums the Plackett-Luce probability over all k! orderings; k > 6 is
// refused. The result must be 1 within the caller's tolerance.
double pl_normalization_check(const std::vector<double>& rewards_by_item, int k);

struct CheckRow {
    std::string name;
    double statistic = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

// The full verification battery as report rows (deterministic for a fixed
// seed).
std::vector<CheckRow> run_prefcheck_suite(std::uint64_t seed);

}  // namespace dppo
