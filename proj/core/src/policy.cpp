#include "dppo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace dppo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_sample_shape(const PolicyParams& params, const SampleInstance& sample) {
    if (static_cast<int>(sample.features.size()) != params.feature_dim()) {
        throw ContractError("feature length " + std::to_string(sample.features.size()) +
                            " does not match policy feature dim " +
                            std::to_string(params.feature_dim()));
    }
    if (static_cast<int>(sample.answers.size()) != params.answer_count()) {
        throw ContractError("answer count " + std::to_string(sample.answers.size()) +
                            " does not match policy answer count " +
                            std::to_string(params.answer_count()));
    }
}

double dot_column(const Matrix& theta, const std::vector<double>& x, int col) {
    double acc = 0.0;
    for (int r = 0; r < theta.rows; ++r) acc += theta.at(r, col) * x[r];
    return acc;
}

// log(1 + exp(z)) without overflow.
double softplus(double z) {
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::vector<double> answer_log_probs(const PolicyParams& params, const SampleInstance& sample) {
    const int K = params.answer_count();
    std::vector<double> logits(K);
    for (int a = 0; a < K; ++a) logits[a] = dot_column(params.theta, sample.features, a);
    const double top = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (int a = 0; a < K; ++a) denom += std::exp(logits[a] - top);
    const double log_denom = top + std::log(denom);
    for (int a = 0; a < K; ++a) logits[a] -= log_denom;
    return logits;  // now log-probabilities
}

}  // namespace

void Matrix::set_zero() { std::fill(data.begin(), data.end(), 0.0); }

void Matrix::add_scaled(const Matrix& other, double scale) {
    if (!same_shape(other)) throw ContractError("matrix shape mismatch in add_scaled");
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += scale * other.data[i];
}

bool Matrix::all_finite() const {
    for (const double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::vector<double> answer_distribution(const PolicyParams& params, const SampleInstance& sample) {
    check_sample_shape(params, sample);
    std::vector<double> p = answer_log_probs(params, sample);
    for (double& v : p) v = std::exp(v);
    return p;
}

double format_probability(const PolicyParams& params, const SampleInstance& sample) {
    check_sample_shape(params, sample);
    return sigmoid(dot_column(params.theta, sample.features, params.answer_count()));
}

int answer_index_of(const SampleInstance& sample, const StructuredResponse& response) {
    const int K = static_cast<int>(sample.answers.size());
    if (skill_is_numeric(sample.skill)) {
        if (!response.is_numeric()) {
            throw ContractError("sample " + std::to_string(sample.id) +
                                " expects a numeric response");
        }
        if (static_cast<int>(sample.answer_values.size()) != K) {
            throw ContractError("sample " + std::to_string(sample.id) +
                                " is missing its numeric answer values");
        }
        int best = 0;
        double best_dist = std::abs(response.value() - sample.answer_values[0]);
        for (int b = 1; b < K; ++b) {
            const double dist = std::abs(response.value() - sample.answer_values[b]);
            if (dist < best_dist) {
                best = b;
                best_dist = dist;
            }
        }
        return best;
    }
    if (!response.is_choice()) {
        throw ContractError("sample " + std::to_string(sample.id) + " expects a choice response");
    }
    const int a = response.choice();
    if (a < 0 || a >= K) {
        throw ContractError("choice index " + std::to_string(a) + " out of range for sample " +
                            std::to_string(sample.id));
    }
    return a;
}

StructuredResponse sample_response(const PolicyParams& params, const SampleInstance& sample,
                                   Rng& rng) {
    const std::vector<double> p = answer_distribution(params, sample);
    const double u = rng.uniform();
    int pick = static_cast<int>(p.size()) - 1;
    double acc = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) {
        acc += p[a];
        if (u < acc) {
            pick = static_cast<int>(a);
            break;
        }
    }
    StructuredResponse r;
    r.format_ok = rng.bernoulli(format_probability(params, sample));
    if (skill_is_numeric(sample.skill)) {
        r.answer = sample.answer_values[pick];
    } else {
        r.answer = pick;
    }
    return r;
}

double log_prob(const PolicyParams& params, const SampleInstance& sample,
                const StructuredResponse& response) {
    check_sample_shape(params, sample);
    const int a = answer_index_of(sample, response);
    const std::vector<double> lp = answer_log_probs(params, sample);
    const double z = dot_column(params.theta, sample.features, params.answer_count());
    // log sigma(z) = -softplus(-z); log(1 - sigma(z)) = -softplus(z).
    const double format_term = response.format_ok ? -softplus(-z) : -softplus(z);
    const double total = lp[a] + format_term;
    if (std::isnan(total)) return -kInf;
    return total;
}

Matrix grad_log_prob(const PolicyParams& params, const SampleInstance& sample,
                     const StructuredResponse& response) {
    const double value = log_prob(params, sample, response);
    if (!std::isfinite(value)) {
        throw ContractError("grad_log_prob: response has zero probability for sample " +
                            std::to_string(sample.id));
    }
    const int K = params.answer_count();
    const int chosen = answer_index_of(sample, response);
    const std::vector<double> p = answer_distribution(params, sample);
    const double sig = format_probability(params, sample);
    const double format_coeff = (response.format_ok ? 1.0 : 0.0) - sig;

    Matrix g(params.feature_dim(), K + 1);
    for (int r = 0; r < g.rows; ++r) {
        const double x = sample.features[r];
        if (x == 0.0) continue;
        for (int a = 0; a < K; ++a) {
            g.at(r, a) = ((a == chosen ? 1.0 : 0.0) - p[a]) * x;
        }
        g.at(r, K) = format_coeff * x;
    }
    return g;
}

Matrix batch_nll_gradient(const PolicyParams& params, const SftBatch& batch) {
    if (batch.empty()) throw ContractError("batch_nll_gradient: empty batch");
    Matrix acc(params.feature_dim(), params.answer_count() + 1);
    for (const auto& [sample, target] : batch) {
        const Matrix g = grad_log_prob(params, *sample, target);
        acc.add_scaled(g, -1.0);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& v : acc.data) v *= inv;
    return acc;
}

PolicyParams sft_step(const PolicyParams& params, const SftBatch& batch, double lr) {
    if (lr < 0.0) throw ContractError("sft_step: negative learning rate");
    const Matrix g = batch_nll_gradient(params, batch);
    PolicyParams next = params;
    next.theta.add_scaled(g, -lr);
    next.step_count = params.step_count + 1;
    return next;
}

std::vector<double> group_weights(const std::vector<double>& rewards) {
    const std::size_t n = rewards.size();
    if (n < 2) throw ContractError("group_weights: group size must be >= 2");
    const auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
    if (*lo == *hi) return std::vector<double>(n, 0.0);  // degenerate group
    double mean = 0.0;
    for (const double r : rewards) mean += r;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(n);
    const double denom = std::sqrt(var) + 1e-8;
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = (rewards[i] - mean) / denom;
    return w;
}

PolicyParams grpo_step(const PolicyParams& params, const std::vector<RolloutGroup>& groups,
                       double lr) {
    if (groups.empty()) throw ContractError("grpo_step: no rollout groups");
    Matrix direction(params.feature_dim(), params.answer_count() + 1);
    for (const RolloutGroup& group : groups) {
        if (group.sample == nullptr) throw ContractError("grpo_step: group without sample");
        if (group.responses.size() != group.rewards.size()) {
            throw ContractError("grpo_step: responses/rewards size mismatch");
        }
        const std::vector<double> w = group_weights(group.rewards);
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (w[i] == 0.0) continue;
            const Matrix g = grad_log_prob(params, *group.sample, group.responses[i]);
            direction.add_scaled(g, w[i]);
        }
    }
    const double inv = 1.0 / static_cast<double>(groups.size());
    PolicyParams next = params;
    next.theta.add_scaled(direction, lr * inv);
    next.step_count = params.step_count + 1;
    return next;
}

PolicyParams snapshot_reference(const PolicyParams& params) { return params; }

}  // namespace dppo
