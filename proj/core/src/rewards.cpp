#include "dppo/rewards.hpp"

#include <cmath>

namespace dppo {

void RewardSpec::validate() const {
    if (!(lambda_format >= 0.0) || !std::isfinite(lambda_format)) {
        throw ConfigError("reward.lambda_f: must be finite and non-negative");
    }
    if (!(lambda_task >= 0.0) || !std::isfinite(lambda_task)) {
        throw ConfigError("reward.lambda_t: must be finite and non-negative");
    }
    if (lambda_format + lambda_task == 0.0) {
        throw ConfigError("reward.lambda_f/lambda_t: weights must not both be zero");
    }
    if (!(numeric_success_threshold > 0.0 && numeric_success_threshold <= 1.0)) {
        throw ConfigError("reward.numeric_success_threshold: must be in (0, 1]");
    }
}

double format_reward(const StructuredResponse& response) {
    return response.format_ok ? 1.0 : 0.0;
}

namespace {

void check_kind(const SampleInstance& sample, const StructuredResponse& response) {
    const bool numeric = skill_is_numeric(sample.skill);
    if (numeric != response.is_numeric()) {
        throw ContractError(std::string("response kind mismatch for sample ") +
                            std::to_string(sample.id) + ": skill " + skill_name(sample.skill) +
                            (numeric ? " expects a numeric answer" : " expects a choice answer"));
    }
}

}  // namespace

double task_reward(const SampleInstance& sample, const StructuredResponse& response) {
    check_kind(sample, response);
    if (response.is_numeric()) {
        if (!(sample.tolerance > 0.0)) {
            throw ContractError("sample " + std::to_string(sample.id) +
                                " has no positive tolerance for numeric scoring");
        }
        const double miss = std::abs(response.value() - sample.target) / sample.tolerance;
        return std::max(0.0, 1.0 - miss);
    }
    return response.choice() == sample.gold ? 1.0 : 0.0;
}

double composite_reward(const RewardSpec& spec, const SampleInstance& sample,
                        const StructuredResponse& response) {
    return spec.lambda_format * format_reward(response) +
           spec.lambda_task * task_reward(sample, response);
}

bool is_success(const RewardSpec& spec, const SampleInstance& sample,
                const StructuredResponse& response) {
    check_kind(sample, response);
    if (!response.format_ok) return false;
    if (response.is_numeric()) {
        return task_reward(sample, response) >= spec.numeric_success_threshold;
    }
    return response.choice() == sample.gold;
}

RewardBreakdown score_response(const RewardSpec& spec, const SampleInstance& sample,
                               const StructuredResponse& response) {
    RewardBreakdown b;
    b.format = format_reward(response);
    b.task = task_reward(sample, response);
    b.composite = spec.lambda_format * b.format + spec.lambda_task * b.task;
    b.success = is_success(spec, sample, response);
    return b;
}

}  // namespace dppo
