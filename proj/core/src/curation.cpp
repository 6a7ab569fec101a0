#include "dppo/curation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dppo {

void StagnationConfig::validate() const {
    if (!(epsilon > 0.05 && epsilon < 0.2)) {
        throw ConfigError("stagnation.epsilon: must lie inside (0.05, 0.2)");
    }
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw ConfigError("stagnation.threshold: must lie in (0, 1]");
    }
}

double success_rate(int success_count, int rollout_count) {
    if (rollout_count <= 0) {
        throw ContractError("success_rate: rollout count must be positive");
    }
    if (success_count < 0 || success_count > rollout_count) {
        throw ContractError("success_rate: success count out of range");
    }
    return static_cast<double>(success_count) / static_cast<double>(rollout_count);
}

double success_delta(double current, std::optional<double> previous, double epsilon) {
    if (!(epsilon > 0.05 && epsilon < 0.2)) {
        throw ConfigError("stagnation.epsilon: must lie inside (0.05, 0.2)");
    }
    if (!previous.has_value()) return 1.0;
    return std::min(1.0, std::abs(current - *previous) / epsilon);
}

double stagnation_score(double rate, double delta) {
    return 1.0 - 4.0 * rate * (1.0 - rate) * delta;
}

double task_stagnation(const std::vector<double>& scores) {
    if (scores.empty()) {
        throw ContractError("task_stagnation: no per-sample scores to aggregate");
    }
    double acc = 0.0;
    for (const double s : scores) acc += s;
    return acc / static_cast<double>(scores.size());
}

bool should_stop(double task_score, double threshold) { return task_score >= threshold; }

DifficultyBuffer::DifficultyBuffer(const SampleSet& universe, StagnationConfig config)
    : config_(config) {
    config_.validate();
    for (const SampleInstance& s : universe.samples()) skills_[s.id] = s.skill;
}

void DifficultyBuffer::begin_round() {
    for (const auto& [id, st] : stats_) carried_rate_[id] = st.success_rate;
    stats_.clear();
    round_start_counter_ = next_counter_;
}

std::uint64_t DifficultyBuffer::log_rollout(RolloutRecord record) {
    auto skill_it = skills_.find(record.sample_id);
    if (skill_it == skills_.end()) {
        throw ContractError("log_rollout: unknown sample id " +
                            std::to_string(record.sample_id));
    }
    record.counter = next_counter_++;
    records_.push_back(record);

    SampleStats& st = stats_[record.sample_id];
    if (st.rollout_count == 0) {
        st.sample_id = record.sample_id;
        st.skill = skill_it->second;
        auto carry = carried_rate_.find(record.sample_id);
        if (carry != carried_rate_.end()) st.prev_success_rate = carry->second;
    }
    st.rollout_count += 1;
    if (record.success) st.success_count += 1;
    st.success_rate = success_rate(st.success_count, st.rollout_count);
    st.delta = success_delta(st.success_rate, st.prev_success_rate, config_.epsilon);
    st.stagnation = stagnation_score(st.success_rate, st.delta);
    latest_rate_[record.sample_id] = st.success_rate;

    if (sink_) sink_(record);
    return record.counter;
}

std::vector<SampleId> DifficultyBuffer::rebalance() const {
    std::vector<SampleId> partial;
    std::vector<SampleId> failed;
    for (const auto& [id, st] : stats_) {
        if (st.rollout_count == 0) continue;
        if (st.success_rate == 1.0) continue;  // mastered: discard
        if (st.success_rate == 0.0) {
            failed.push_back(id);
        } else {
            partial.push_back(id);
        }
    }
    // Cap fully-failed samples at the partial count; excess is dropped in
    // ascending id order (smallest ids first).
    if (failed.size() > partial.size()) {
        const std::size_t drop = failed.size() - partial.size();
        failed.erase(failed.begin(), failed.begin() + static_cast<std::ptrdiff_t>(drop));
    }
    std::vector<SampleId> out;
    out.reserve(partial.size() + failed.size());
    out.insert(out.end(), partial.begin(), partial.end());
    out.insert(out.end(), failed.begin(), failed.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<SampleId> DifficultyBuffer::collect_weak() const {
    std::vector<SampleId> out;
    for (const auto& [id, rate] : latest_rate_) {
        if (rate == 0.0) out.push_back(id);
    }
    return out;  // map iteration is already ascending
}

double DifficultyBuffer::task_stagnation_for(SkillDimension skill) const {
    // Boundary samples sit at maximal stagnation by construction: mastered
    // ones (rate 1) because practice is finished, failed ones (rate 0)
    // because reinforcement has nothing to work with — those are handled by
    // rebalancing and weak-set rescue instead. The task statistic therefore
    // tracks whether the in-progress samples are still moving; a task with
    // measurements but no in-progress samples is fully stagnant.
    std::vector<double> scores;
    bool measured = false;
    for (const auto& [id, st] : stats_) {
        if (st.skill != skill) continue;
        measured = true;
        if (st.success_rate > 0.0 && st.success_rate < 1.0) {
            scores.push_back(st.stagnation);
        }
    }
    if (measured && scores.empty()) return 1.0;
    return task_stagnation(scores);
}

bool DifficultyBuffer::task_should_stop(SkillDimension skill) const {
    return should_stop(task_stagnation_for(skill), config_.threshold);
}

bool DifficultyBuffer::has_task_measurements(SkillDimension skill) const {
    for (const auto& [id, st] : stats_) {
        if (st.skill == skill) return true;
    }
    return false;
}

void DifficultyBuffer::reset() {
    for (const auto& [id, st] : stats_) carried_rate_[id] = st.success_rate;
    stats_.clear();
    records_.clear();
    latest_rate_.clear();
    round_start_counter_ = next_counter_;
}

std::vector<RolloutRecord> DifficultyBuffer::round_records() const {
    std::vector<RolloutRecord> out;
    for (const RolloutRecord& r : records_) {
        if (r.counter >= round_start_counter_) out.push_back(r);
    }
    return out;
}

}  // namespace dppo
