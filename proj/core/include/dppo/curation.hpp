#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "dppo/taskgen.hpp"
#include "dppo/types.hpp"

namespace dppo {

// One logged rollout. `counter` is a monotonic stamp assigned by the buffer;
// no wall-clock anywhere.
struct RolloutRecord {
    SampleId sample_id = 0;
    int loop_index = 0;
    StructuredResponse response;
    double format_reward = 0.0;
    double task_reward = 0.0;
    double composite = 0.0;
    bool success = false;
    std::uint64_t rng_seed = 0;
    std::uint64_t counter = 0;
};

// Per-sample rollout statistics for the current round.
struct SampleStats {
    SampleId sample_id = 0;
    SkillDimension skill = SkillDimension::AffordanceReasoning;
    int rollout_count = 0;
    int success_count = 0;
    double success_rate = 0.0;
    std::optional<double> prev_success_rate;
    double delta = 1.0;
    double stagnation = 1.0;
};

struct StagnationConfig {
    double epsilon = 0.1;    // normalizer for the success-rate change; open interval (0.05, 0.2)
    double threshold = 0.7;  // per-task stop level

    void validate() const;
};

// --- pure formulas ------------------------------------------------------

// successes / rollouts; rollouts == 0 is a contract violation.
double success_rate(int success_count, int rollout_count);

// min(1, |current - previous| / epsilon); 1 when no previous measurement
// exists. epsilon outside (0.05, 0.2) is a config error.
double success_delta(double current, std::optional<double> previous, double epsilon);

// 1 - 4 * rate * (1 - rate) * delta; exactly 1 at rate 0 or 1, or delta 0.
double stagnation_score(double rate, double delta);

// Mean of per-sample stagnation scores; empty input is a contract violation.
double task_stagnation(const std::vector<double>& scores);

bool should_stop(double task_score, double threshold);

// --- difficulty-aware rollout buffer -------------------------------------

using RolloutSink = std::function<void(const RolloutRecord&)>;

// Tracks rollout outcomes per sample, scores stagnation, and applies the
// rebalancing rules that pick the policy-update set. Rounds are bounded by
// begin_round(); reset() ends a loop, carrying each sample's last success
// rate forward as the next measurement's baseline.
class DifficultyBuffer {
public:
    DifficultyBuffer(const SampleSet& universe, StagnationConfig config);

    // Optional sink invoked once per logged record (e.g. a file writer).
    // The sink outlives the buffer's reset(): persisted logs are untouched.
    void set_sink(RolloutSink sink) { sink_ = std::move(sink); }

    // Snapshots every measured success rate as the next round's baseline and
    // clears the per-round stats.
    void begin_round();

    // Appends the record (assigning its monotonic counter), updates the
    // sample's stats, and forwards to the sink. Unknown ids are a contract
    // violation.
    std::uint64_t log_rollout(RolloutRecord record);

    const std::map<SampleId, SampleStats>& stats() const { return stats_; }

    // Latest measured success rate per sample since the last reset.
    const std::map<SampleId, double>& latest_rates() const { return latest_rate_; }

    // Update-set selection: drop mastered samples (rate 1), keep every
    // partial, cap fully-failed samples at the partial count, dropping the
    // excess in ascending id order. Result is ascending by id.
    std::vector<SampleId> rebalance() const;

    // Ids whose latest measured success rate since the last reset is exactly
    // 0, ascending. Covers samples whose final measurement happened in an
    // earlier round (dropped by rebalancing or halted with their task).
    std::vector<SampleId> collect_weak() const;

    // Mean stagnation score over the current round's in-progress measured
    // samples of `skill` (0 < success rate < 1). Boundary samples are pinned
    // at maximal stagnation by the score's shape and belong to rebalancing
    // (rate 0) or retirement (rate 1), not to the stop decision. Returns 1
    // when no measured sample is in progress; no current-round measurements
    // is a contract violation.
    double task_stagnation_for(SkillDimension skill) const;
    bool task_should_stop(SkillDimension skill) const;
    bool has_task_measurements(SkillDimension skill) const;

    // Ends the loop: carries success rates forward, clears stats, records
    // and latest-score tracking. Counters keep increasing monotonically.
    void reset();

    // Records logged since the last begin_round().
    std::vector<RolloutRecord> round_records() const;
    const std::vector<RolloutRecord>& loop_records() const { return records_; }

    const StagnationConfig& config() const { return config_; }

private:
    std::map<SampleId, SkillDimension> skills_;
    StagnationConfig config_;
    std::map<SampleId, SampleStats> stats_;
    std::map<SampleId, double> carried_rate_;
    std::map<SampleId, double> latest_rate_;
    std::vector<RolloutRecord> records_;
    std::uint64_t next_counter_ = 0;
    std::uint64_t round_start_counter_ = 0;
    RolloutSink sink_;
};

}  // namespace dppo
