#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dppo/rng.hpp"
#include "dppo/types.hpp"

namespace dppo {

// Minimal dense row-major matrix; all policy math is small and explicit.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    void set_zero();
    void add_scaled(const Matrix& other, double scale);
    bool all_finite() const;
    bool same_shape(const Matrix& other) const { return rows == other.rows && cols == other.cols; }
};

// Linear-softmax policy over K answer candidates plus one format logit.
// theta has shape F x (K+1); column K drives the Bernoulli format branch.
struct PolicyParams {
    Matrix theta;
    std::int64_t step_count = 0;

    PolicyParams() = default;
    PolicyParams(int feature_dim, int answer_count) : theta(feature_dim, answer_count + 1) {}

    int feature_dim() const { return theta.rows; }
    int answer_count() const { return theta.cols - 1; }
};

// One sample's rollouts with their composite rewards; the unit the
// group-standardized update works on.
struct RolloutGroup {
    const SampleInstance* sample = nullptr;
    std::vector<StructuredResponse> responses;
    std::vector<double> rewards;
};

using SftBatch = std::vector<std::pair<const SampleInstance*, StructuredResponse>>;

// Softmax over the K per-candidate scores theta[:,a] . features; sums to 1
// within 1e-12.
std::vector<double> answer_distribution(const PolicyParams& params, const SampleInstance& sample);

double format_probability(const PolicyParams& params, const SampleInstance& sample);

// Maps a response to its candidate index: the choice index itself, or the
// nearest numeric bin (ties resolve to the lower index).
int answer_index_of(const SampleInstance& sample, const StructuredResponse& response);

// Draws (answer, format flag); numeric skills report the sampled bin center.
StructuredResponse sample_response(const PolicyParams& params, const SampleInstance& sample,
                                   Rng& rng);

// log(answer probability x format-branch probability); -inf when the
// response probability underflows to zero.
double log_prob(const PolicyParams& params, const SampleInstance& sample,
                const StructuredResponse& response);

// Analytic gradient of log_prob with respect to theta. Throws ContractError
// when log_prob is not finite.
Matrix grad_log_prob(const PolicyParams& params, const SampleInstance& sample,
                     const StructuredResponse& response);

// Mean over the batch of the negative log-likelihood gradient.
Matrix batch_nll_gradient(const PolicyParams& params, const SftBatch& batch);

// One supervised step: params - lr * batch_nll_gradient. Empty batch or
// lr < 0 is a contract violation.
PolicyParams sft_step(const PolicyParams& params, const SftBatch& batch, double lr);

// Group-standardized weights (reward - mean) / (population std + 1e-8).
// Exactly zero for groups whose rewards are all equal. Size < 2 is a
// contract violation.
std::vector<double> group_weights(const std::vector<double>& rewards);

// One policy-gradient step: params + lr * mean over groups of
// sum_i weights_i * grad log_prob(response_i).
PolicyParams grpo_step(const PolicyParams& params, const std::vector<RolloutGroup>& groups,
                       double lr);

// Deep copy used as the frozen reference policy.
PolicyParams snapshot_reference(const PolicyParams& params);

}  // namespace dppo
