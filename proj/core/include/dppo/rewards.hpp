#pragma once

#include "dppo/types.hpp"

namespace dppo {

// Composite reward weights plus the success threshold for numeric tasks.
struct RewardSpec {
    double lambda_format = 0.1;
    double lambda_task = 0.9;
    double numeric_success_threshold = 0.75;

    void validate() const;  // throws ConfigError naming the offending key
};

struct RewardBreakdown {
    double format = 0.0;
    double task = 0.0;
    double composite = 0.0;
    bool success = false;
};

// 1.0 when the response carries the structured format (flag set and an
// answer payload present), else 0.0.
double format_reward(const StructuredResponse& response);

// Choice: exact-match indicator against the gold index. Numeric: graded
// max(0, 1 - |value - target| / tolerance). Response kind must match the
// sample's skill.
double task_reward(const SampleInstance& sample, const StructuredResponse& response);

// lambda_format * format_reward + lambda_task * task_reward, evaluated in
// full double precision with no intermediate rounding.
double composite_reward(const RewardSpec& spec, const SampleInstance& sample,
                        const StructuredResponse& response);

// Choice: correct answer AND structured format. Numeric: task reward at or
// above the threshold AND structured format.
bool is_success(const RewardSpec& spec, const SampleInstance& sample,
                const StructuredResponse& response);

RewardBreakdown score_response(const RewardSpec& spec, const SampleInstance& sample,
                               const StructuredResponse& response);

}  // namespace dppo
