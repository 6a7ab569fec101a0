#include "dppo/metaloop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "dppo/rng.hpp"

namespace dppo {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Stream tags keeping every random consumer on its own derived stream.
constexpr std::uint64_t kTagRollout = 0x524f4c4c;
constexpr std::uint64_t kTagSftShuffle = 0x53465453;
constexpr std::uint64_t kTagGenDraw = 0x47454e44;
constexpr std::uint64_t kTagSplit = 0x53504c54;

void check_finite(const PolicyParams& params, const std::string& where) {
    if (!params.theta.all_finite()) {
        throw ContractError("non-finite policy parameters after " + where);
    }
}

std::array<double, kSkillCount> train_rates_by_skill(const SampleSet& suite,
                                                     const DifficultyBuffer& buffer) {
    std::array<double, kSkillCount> sum{};
    std::array<int, kSkillCount> count{};
    for (const auto& [id, rate] : buffer.latest_rates()) {
        const int k = static_cast<int>(suite.by_id(id).skill);
        sum[k] += rate;
        count[k] += 1;
    }
    std::array<double, kSkillCount> out{};
    for (int k = 0; k < kSkillCount; ++k) {
        out[k] = count[k] > 0 ? sum[k] / count[k] : kNan;
    }
    return out;
}

// T rollouts of one sample from a private derived stream; every record is
// stamped with that stream's seed so the log alone can replay it. Returns
// the rollouts as an update group.
RolloutGroup roll_sample(const LoopConfig& config, const SampleInstance& sample, int loop_index,
                         std::uint64_t stream_seed, PolicyParams& params,
                         DifficultyBuffer& buffer, BudgetMeter& budget) {
    RolloutGroup group;
    group.sample = &sample;
    Rng rng(stream_seed);
    for (int t = 0; t < config.rollouts_per_sample; ++t) {
        RolloutRecord rec;
        rec.sample_id = sample.id;
        rec.loop_index = loop_index;
        rec.response = sample_response(params, sample, rng);
        const RewardBreakdown b = score_response(config.reward, sample, rec.response);
        rec.format_reward = b.format;
        rec.task_reward = b.task;
        rec.composite = b.composite;
        rec.success = b.success;
        rec.rng_seed = stream_seed;
        buffer.log_rollout(rec);
        group.responses.push_back(rec.response);
        group.rewards.push_back(rec.composite);
    }
    budget.rollouts += static_cast<std::uint64_t>(config.rollouts_per_sample);
    return group;
}

struct StopTracker {
    std::array<bool, kSkillCount> stopped{};
    std::array<double, kSkillCount> value{};
    std::array<int, kSkillCount> epoch{};

    StopTracker() {
        value.fill(kNan);
        epoch.fill(-1);
    }

    void check(const DifficultyBuffer& buffer, int at_epoch) {
        for (int k = 0; k < kSkillCount; ++k) {
            const auto skill = static_cast<SkillDimension>(k);
            if (stopped[k] || !buffer.has_task_measurements(skill)) continue;
            const double score = buffer.task_stagnation_for(skill);
            if (should_stop(score, buffer.config().threshold)) {
                stopped[k] = true;
                value[k] = score;
                epoch[k] = at_epoch;
            }
        }
    }
};

std::vector<SampleId> apply_difficulty_ceiling(const LoopConfig& config, const SampleSet& suite,
                                               const std::vector<SampleId>& candidates,
                                               int loop_index) {
    if (config.difficulty_ceiling.empty()) return candidates;
    const std::size_t idx =
        std::min<std::size_t>(config.difficulty_ceiling.size() - 1,
                              static_cast<std::size_t>(loop_index > 0 ? loop_index - 1 : 0));
    const double ceiling = config.difficulty_ceiling[idx];
    std::vector<SampleId> out;
    for (const SampleId id : candidates) {
        if (suite.by_id(id).difficulty <= ceiling) out.push_back(id);
    }
    return out;
}

}  // namespace

const char* phase_name(Phase phase) { return phase == Phase::RL ? "RL" : "SFT"; }

void LoopConfig::validate() const {
    if (loops < 0) throw ConfigError("loop.loops: must be non-negative");
    if (rollouts_per_sample < 2) {
        throw ConfigError("loop.rollouts_per_sample: must be >= 2 (group updates need "
                          "at least two rollouts)");
    }
    if (rl_epoch_cap < 0) throw ConfigError("loop.rl_epoch_cap: must be non-negative");
    if (sft_epochs < 0) throw ConfigError("loop.sft_epochs: must be non-negative");
    if (!(lr_rl >= 0.0) || !std::isfinite(lr_rl)) {
        throw ConfigError("loop.lr_rl: must be finite and non-negative");
    }
    if (!(lr_sft >= 0.0) || !std::isfinite(lr_sft)) {
        throw ConfigError("loop.lr_sft: must be finite and non-negative");
    }
    if (!(gen_replay_fraction >= 0.0) || !std::isfinite(gen_replay_fraction)) {
        throw ConfigError("loop.gen_replay_fraction: must be finite and non-negative");
    }
    for (const double c : difficulty_ceiling) {
        if (!(c >= 0.0 && c <= 1.0)) {
            throw ConfigError("loop.difficulty_ceiling: entries must lie in [0, 1]");
        }
    }
    reward.validate();
    stagnation.validate();
}

EvalSplit make_split(const SampleSet& suite, double holdout_fraction, std::uint64_t seed) {
    if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
        throw ConfigError("holdout_fraction: must be in [0, 1)");
    }
    EvalSplit split;
    for (int k = 0; k < kSkillCount; ++k) {
        for (int pool = 0; pool < 2; ++pool) {
            std::vector<SampleId> stratum;
            for (const SampleInstance& s : suite.samples()) {
                if (static_cast<int>(s.skill) == k && s.is_general == (pool == 1)) {
                    stratum.push_back(s.id);
                }
            }
            std::sort(stratum.begin(), stratum.end());
            Rng rng(derive_seed(seed, kTagSplit, static_cast<std::uint64_t>(k),
                                static_cast<std::uint64_t>(pool)));
            rng.shuffle(stratum);
            const std::size_t n_hold =
                static_cast<std::size_t>(std::floor(holdout_fraction * stratum.size()));
            for (std::size_t i = 0; i < stratum.size(); ++i) {
                const bool hold = i < n_hold;
                if (pool == 1) {
                    (hold ? split.heldout_general : split.train_general).push_back(stratum[i]);
                } else {
                    (hold ? split.heldout_embodied : split.train_embodied).push_back(stratum[i]);
                }
            }
        }
    }
    std::sort(split.train_embodied.begin(), split.train_embodied.end());
    std::sort(split.train_general.begin(), split.train_general.end());
    std::sort(split.heldout_embodied.begin(), split.heldout_embodied.end());
    std::sort(split.heldout_general.begin(), split.heldout_general.end());
    return split;
}

double expected_success(const RewardSpec& spec, const PolicyParams& params,
                        const SampleInstance& sample) {
    const std::vector<double> p = answer_distribution(params, sample);
    double mass = 0.0;
    if (skill_is_numeric(sample.skill)) {
        for (std::size_t b = 0; b < p.size(); ++b) {
            StructuredResponse r;
            r.format_ok = true;
            r.answer = sample.answer_values[b];
            if (task_reward(sample, r) >= spec.numeric_success_threshold) mass += p[b];
        }
    } else {
        mass = p[sample.gold];
    }
    return format_probability(params, sample) * mass;
}

double evaluate_success(const RewardSpec& spec, const PolicyParams& params,
                        const SampleSet& suite, const std::vector<SampleId>& ids) {
    if (ids.empty()) return kNan;
    double acc = 0.0;
    for (const SampleId id : ids) acc += expected_success(spec, params, suite.by_id(id));
    return acc / static_cast<double>(ids.size());
}

std::array<double, kSkillCount> evaluate_success_by_skill(const RewardSpec& spec,
                                                          const PolicyParams& params,
                                                          const SampleSet& suite,
                                                          const std::vector<SampleId>& ids) {
    std::array<double, kSkillCount> sum{};
    std::array<int, kSkillCount> count{};
    for (const SampleId id : ids) {
        const SampleInstance& s = suite.by_id(id);
        sum[static_cast<int>(s.skill)] += expected_success(spec, params, s);
        count[static_cast<int>(s.skill)] += 1;
    }
    std::array<double, kSkillCount> out{};
    for (int k = 0; k < kSkillCount; ++k) {
        out[k] = count[k] > 0 ? sum[k] / count[k] : kNan;
    }
    return out;
}

RlPhaseReport rl_phase(const LoopConfig& config, const SampleSet& suite,
                       const std::vector<SampleId>& candidates, int loop_index,
                       DifficultyBuffer& buffer, PolicyParams& params, BudgetMeter& budget,
                       std::uint64_t seed, std::vector<UpdateLogEntry>* update_log) {
    RlPhaseReport report;
    const std::vector<SampleId> pool =
        apply_difficulty_ceiling(config, suite, candidates, loop_index);

    // Diagnostic round: T rollouts per candidate, no update.
    buffer.begin_round();
    for (const SampleId id : pool) {
        const std::uint64_t s = derive_seed(seed, kTagRollout,
                                            static_cast<std::uint64_t>(loop_index) << 20,
                                            static_cast<std::uint64_t>(id));
        (void)roll_sample(config, suite.by_id(id), loop_index, s, params, buffer, budget);
    }

    report.rl_ids = buffer.rebalance();
    StopTracker stops;

    // Skills whose entire candidate set was discarded by rebalancing (all
    // mastered, or all failed past the zero cap) have nothing to train this
    // phase; record them as stopped at the diagnostic round. Everything else
    // is first judged after at least one update epoch, once a fresh round
    // exists to measure change against.
    std::array<bool, kSkillCount> has_active{};
    for (const SampleId id : report.rl_ids) {
        has_active[static_cast<int>(suite.by_id(id).skill)] = true;
    }
    for (int k = 0; k < kSkillCount; ++k) {
        const auto skill = static_cast<SkillDimension>(k);
        if (!has_active[k] && buffer.has_task_measurements(skill)) {
            stops.stopped[k] = true;
            stops.value[k] = buffer.task_stagnation_for(skill);
            stops.epoch[k] = 0;
        }
    }

    if (report.rl_ids.empty()) {
        report.skipped = true;
    }

    for (int epoch = 1; epoch <= config.rl_epoch_cap && !report.skipped; ++epoch) {
        std::vector<SampleId> active;
        for (const SampleId id : report.rl_ids) {
            if (!stops.stopped[static_cast<int>(suite.by_id(id).skill)]) active.push_back(id);
        }
        if (active.empty()) break;

        buffer.begin_round();
        std::vector<RolloutGroup> groups;
        groups.reserve(active.size());
        for (const SampleId id : active) {
            const SampleInstance& sample = suite.by_id(id);
            const std::uint64_t s = derive_seed(
                seed, kTagRollout,
                (static_cast<std::uint64_t>(loop_index) << 20) + static_cast<std::uint64_t>(epoch),
                static_cast<std::uint64_t>(id));
            groups.push_back(roll_sample(config, sample, loop_index, s, params, buffer, budget));
        }
        params = grpo_step(params, groups, config.lr_rl);
        budget.grad_touches += static_cast<std::uint64_t>(config.rollouts_per_sample) *
                               static_cast<std::uint64_t>(active.size());
        if (update_log) update_log->push_back({loop_index, Phase::RL, 'G'});
        check_finite(params, "RL update in loop " + std::to_string(loop_index));
        report.epochs_run = epoch;
        stops.check(buffer, epoch);
    }

    for (int k = 0; k < kSkillCount; ++k) {
        const auto skill = static_cast<SkillDimension>(k);
        if (stops.stopped[k]) {
            report.stagnation_at_stop[k] = stops.value[k];
            report.stopped_before_cap[k] = stops.epoch[k] < config.rl_epoch_cap;
        } else if (buffer.has_task_measurements(skill)) {
            report.stagnation_at_stop[k] = buffer.task_stagnation_for(skill);
            report.stopped_before_cap[k] = false;
        } else {
            report.stagnation_at_stop[k] = kNan;
            report.stopped_before_cap[k] = false;
        }
    }
    return report;
}

std::vector<SftExample> teacher_examples(const SampleSet& suite,
                                         const std::vector<SampleId>& ids) {
    std::vector<SftExample> out;
    out.reserve(ids.size());
    for (const SampleId id : ids) {
        out.push_back({id, teacher_solve(suite.by_id(id)).response});
    }
    return out;
}

DatasetPartition build_sft_dataset(const LoopConfig& config, const SampleSet& suite,
                                   const EvalSplit& split, const DifficultyBuffer& buffer,
                                   const std::vector<SampleId>& rl_ids, std::uint64_t seed) {
    DatasetPartition part;
    part.rl_ids = rl_ids;

    const std::vector<SampleId> weak_ids = buffer.collect_weak();
    part.weak = teacher_examples(suite, weak_ids);
    if (part.weak.empty()) return part;

    std::set<SampleId> weak_set(weak_ids.begin(), weak_ids.end());
    std::set<SkillDimension> weak_skills;
    for (const SampleId id : weak_ids) weak_skills.insert(suite.by_id(id).skill);

    // Related retrieval pool: embodied train samples not already in the weak
    // set (held-out and general samples are never eligible).
    SampleSet rel_pool(suite.feature_dim(), suite.answer_count(), suite.value_range());
    for (const SampleId id : split.train_embodied) {
        if (weak_set.count(id) == 0) rel_pool.add(suite.by_id(id));
    }
    const SampleSet rel = related_samples(rel_pool, weak_skills);
    part.related = teacher_examples(rel, rel.ids());

    const auto replay_count = static_cast<std::size_t>(
        std::floor(config.gen_replay_fraction *
                   static_cast<double>(part.weak.size() + part.related.size())));
    std::vector<SampleId> gen_ids = split.train_general;
    Rng rng(derive_seed(seed, kTagGenDraw));
    rng.shuffle(gen_ids);
    gen_ids.resize(std::min(replay_count, gen_ids.size()));
    std::sort(gen_ids.begin(), gen_ids.end());
    part.replay = teacher_examples(suite, gen_ids);

    part.sft.reserve(part.weak.size() + part.related.size() + part.replay.size());
    part.sft.insert(part.sft.end(), part.weak.begin(), part.weak.end());
    part.sft.insert(part.sft.end(), part.related.begin(), part.related.end());
    part.sft.insert(part.sft.end(), part.replay.begin(), part.replay.end());
    return part;
}

SftPhaseReport sft_phase(const LoopConfig& config, const SampleSet& suite,
                         const DatasetPartition& partition, int loop_index, PolicyParams& params,
                         BudgetMeter& budget, std::uint64_t seed,
                         std::vector<UpdateLogEntry>* update_log) {
    SftPhaseReport report;
    if (partition.sft.empty() || config.sft_epochs == 0) return report;

    auto mean_nll = [&](const PolicyParams& p) {
        double acc = 0.0;
        for (const SftExample& ex : partition.sft) {
            acc -= log_prob(p, suite.by_id(ex.id), ex.target);
        }
        return acc / static_cast<double>(partition.sft.size());
    };

    report.initial_nll = mean_nll(params);
    std::vector<std::size_t> order(partition.sft.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= config.sft_epochs; ++epoch) {
        Rng rng(derive_seed(seed, kTagSftShuffle,
                            (static_cast<std::uint64_t>(loop_index) << 20) +
                                static_cast<std::uint64_t>(epoch)));
        rng.shuffle(order);
        SftBatch batch;
        batch.reserve(order.size());
        for (const std::size_t i : order) {
            const SftExample& ex = partition.sft[i];
            batch.emplace_back(&suite.by_id(ex.id), ex.target);
        }
        params = sft_step(params, batch, config.lr_sft);
        budget.grad_touches += static_cast<std::uint64_t>(batch.size());
        if (update_log) update_log->push_back({loop_index, Phase::SFT, 'S'});
        check_finite(params, "SFT update in loop " + std::to_string(loop_index));
        report.epochs_run = epoch;

        const double nll = mean_nll(params);
        if (nll > report.initial_nll * 1.1 + 1e-12) {
            throw ContractError("sft divergence in loop " + std::to_string(loop_index) +
                                ": mean NLL rose more than 10% above " +
                                std::to_string(report.initial_nll));
        }
        report.final_nll = nll;
    }
    return report;
}

namespace {

PhaseRow make_row(const LoopConfig& config, const SampleSet& suite, const EvalSplit& split,
                  const PolicyParams& params, const DifficultyBuffer& buffer,
                  const BudgetMeter& budget, int loop, Phase phase) {
    PhaseRow row;
    row.loop = loop;
    row.phase = phase;
    row.heldout_embodied =
        evaluate_success(config.reward, params, suite, split.heldout_embodied);
    row.heldout_general = evaluate_success(config.reward, params, suite, split.heldout_general);
    row.heldout_by_skill =
        evaluate_success_by_skill(config.reward, params, suite, split.heldout_embodied);
    row.train_rate_by_skill = train_rates_by_skill(suite, buffer);
    row.rollouts_used = budget.rollouts;
    row.grad_touches_used = budget.grad_touches;
    return row;
}

}  // namespace

MetaloopResult run_metaloop(const LoopConfig& config, const SampleSet& suite,
                            const EvalSplit& split, PolicyParams params, std::uint64_t seed,
                            const RolloutSink& sink, const CheckpointHook& checkpoint) {
    config.validate();
    if (split.train_embodied.empty()) {
        throw ContractError("run_metaloop: no embodied training samples in the split");
    }

    MetaloopResult result;
    DifficultyBuffer buffer(suite, config.stagnation);
    if (sink) buffer.set_sink(sink);

    for (int loop = 1; loop <= config.loops; ++loop) {
        const RlPhaseReport rl = rl_phase(config, suite, split.train_embodied, loop, buffer,
                                          params, result.budget, seed, &result.update_log);
        PhaseRow rl_row = make_row(config, suite, split, params, buffer, result.budget, loop,
                                   Phase::RL);
        rl_row.stagnation_by_skill = rl.stagnation_at_stop;
        rl_row.task_stopped_early = rl.stopped_before_cap;
        rl_row.rl_size = static_cast<int>(rl.rl_ids.size());
        rl_row.rl_epochs_run = rl.epochs_run;
        result.history.push_back(rl_row);
        if (checkpoint) checkpoint(loop, Phase::RL, params);

        const DatasetPartition part = build_sft_dataset(
            config, suite, split, buffer, rl.rl_ids,
            derive_seed(seed, static_cast<std::uint64_t>(loop)));
        const SftPhaseReport sft =
            sft_phase(config, suite, part, loop, params, result.budget, seed,
                      &result.update_log);
        (void)sft;
        PhaseRow sft_row = make_row(config, suite, split, params, buffer, result.budget, loop,
                                    Phase::SFT);
        sft_row.stagnation_by_skill = rl.stagnation_at_stop;
        sft_row.rl_size = static_cast<int>(rl.rl_ids.size());
        sft_row.weak_size = static_cast<int>(part.weak.size());
        sft_row.related_size = static_cast<int>(part.related.size());
        sft_row.replay_size = static_cast<int>(part.replay.size());
        result.history.push_back(sft_row);
        if (checkpoint) checkpoint(loop, Phase::SFT, params);

        buffer.reset();
    }

    if (config.final_rl_phase) {
        const int loop = config.loops + 1;
        const RlPhaseReport rl = rl_phase(config, suite, split.train_embodied, loop, buffer,
                                          params, result.budget, seed, &result.update_log);
        PhaseRow row = make_row(config, suite, split, params, buffer, result.budget, loop,
                                Phase::RL);
        row.stagnation_by_skill = rl.stagnation_at_stop;
        row.task_stopped_early = rl.stopped_before_cap;
        row.rl_size = static_cast<int>(rl.rl_ids.size());
        row.rl_epochs_run = rl.epochs_run;
        result.history.push_back(row);
        if (checkpoint) checkpoint(loop, Phase::RL, params);
        buffer.reset();
    }

    result.params = std::move(params);
    return result;
}

PolicyParams fit_supervised(const LoopConfig& config, const SampleSet& suite,
                            const std::vector<SftExample>& examples, PolicyParams params,
                            int epochs, double lr, std::uint64_t seed, BudgetMeter* budget) {
    if (examples.empty() || epochs <= 0) return params;
    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (int epoch = 1; epoch <= epochs; ++epoch) {
        Rng rng(derive_seed(seed, kTagSftShuffle, static_cast<std::uint64_t>(epoch)));
        rng.shuffle(order);
        SftBatch batch;
        batch.reserve(order.size());
        for (const std::size_t i : order) {
            batch.emplace_back(&suite.by_id(examples[i].id), examples[i].target);
        }
        params = sft_step(params, batch, lr);
        if (budget) budget->grad_touches += static_cast<std::uint64_t>(batch.size());
        check_finite(params, "supervised fit epoch " + std::to_string(epoch));
    }
    return params;
}

MetaloopResult run_baseline(BaselineMode mode, const LoopConfig& config, const SampleSet& suite,
                            const EvalSplit& split, PolicyParams params, std::uint64_t seed,
                            const BudgetMeter& target, const RolloutSink& sink,
                            const CheckpointHook& checkpoint) {
    config.validate();
    const std::uint64_t target_total = target.total();
    if (target_total == 0) throw ContractError("run_baseline: zero target budget");

    MetaloopResult result;
    const auto remaining = [&]() -> std::uint64_t {
        const std::uint64_t spent = result.budget.total();
        return spent >= target_total ? 0 : target_total - spent;
    };
    const auto T = static_cast<std::uint64_t>(config.rollouts_per_sample);

    if (mode == BaselineMode::RlOnly) {
        DifficultyBuffer buffer(suite, config.stagnation);
        if (sink) buffer.set_sink(sink);
        int loop = 1;
        while (remaining() >= 2 * T) {
            // The per-loop difficulty schedule belongs to the metaloop; the
            // baseline rolls the full training pool every round.
            const std::vector<SampleId>& pool = split.train_embodied;
            if (pool.empty()) throw ContractError("run_baseline: no RL candidates");

            buffer.begin_round();
            for (const SampleId id : pool) {
                if (remaining() < T) break;
                const std::uint64_t s = derive_seed(seed, kTagRollout,
                                                    static_cast<std::uint64_t>(loop) << 20,
                                                    static_cast<std::uint64_t>(id));
                roll_sample(config, suite.by_id(id), loop, s, params, buffer, result.budget);
            }
            const std::vector<SampleId> rl_ids = buffer.rebalance();
            StopTracker stops;
            std::array<bool, kSkillCount> has_active{};
            for (const SampleId id : rl_ids) {
                has_active[static_cast<int>(suite.by_id(id).skill)] = true;
            }
            for (int k = 0; k < kSkillCount; ++k) {
                const auto skill = static_cast<SkillDimension>(k);
                if (!has_active[k] && buffer.has_task_measurements(skill)) {
                    stops.stopped[k] = true;
                    stops.value[k] = buffer.task_stagnation_for(skill);
                    stops.epoch[k] = 0;
                }
            }

            int epochs_run = 0;
            for (int epoch = 1; epoch <= config.rl_epoch_cap && !rl_ids.empty(); ++epoch) {
                std::vector<SampleId> active;
                for (const SampleId id : rl_ids) {
                    if (!stops.stopped[static_cast<int>(suite.by_id(id).skill)]) {
                        active.push_back(id);
                    }
                }
                if (active.empty()) break;

                buffer.begin_round();
                std::vector<RolloutGroup> groups;
                for (const SampleId id : active) {
                    if (remaining() < 2 * T) break;
                    const SampleInstance& sample = suite.by_id(id);
                    const std::uint64_t s =
                        derive_seed(seed, kTagRollout,
                                    (static_cast<std::uint64_t>(loop) << 20) +
                                        static_cast<std::uint64_t>(epoch),
                                    static_cast<std::uint64_t>(id));
                    groups.push_back(
                        roll_sample(config, sample, loop, s, params, buffer, result.budget));
                    result.budget.grad_touches += T;
                }
                if (groups.empty()) break;
                params = grpo_step(params, groups, config.lr_rl);
                result.update_log.push_back({loop, Phase::RL, 'G'});
                check_finite(params, "RL update in baseline loop " + std::to_string(loop));
                epochs_run = epoch;
                stops.check(buffer, epoch);
                if (remaining() < 2 * T) break;
            }

            PhaseRow row = make_row(config, suite, split, params, buffer, result.budget, loop,
                                    Phase::RL);
            for (int k = 0; k < kSkillCount; ++k) {
                const auto skill = static_cast<SkillDimension>(k);
                if (stops.stopped[k]) {
                    row.stagnation_by_skill[k] = stops.value[k];
                    row.task_stopped_early[k] = stops.epoch[k] < config.rl_epoch_cap;
                } else {
                    row.stagnation_by_skill[k] = buffer.has_task_measurements(skill)
                                                     ? buffer.task_stagnation_for(skill)
                                                     : kNan;
                }
            }
            row.rl_size = static_cast<int>(rl_ids.size());
            row.rl_epochs_run = epochs_run;
            result.history.push_back(row);
            if (checkpoint) checkpoint(loop, Phase::RL, params);
            buffer.reset();
            loop += 1;
        }
    } else {
        // sft_only: the whole budget becomes supervised touches over the full
        // embodied train pool with teacher targets.
        const std::vector<SftExample> pool = teacher_examples(suite, split.train_embodied);
        if (pool.empty()) throw ContractError("run_baseline: empty embodied train pool");

        double initial_nll = kNan;
        auto mean_nll = [&](const PolicyParams& p) {
            double acc = 0.0;
            for (const SftExample& ex : pool) acc -= log_prob(p, suite.by_id(ex.id), ex.target);
            return acc / static_cast<double>(pool.size());
        };
        initial_nll = mean_nll(params);

        std::vector<std::size_t> order(pool.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        int rows_emitted = 0;
        std::uint64_t epoch = 0;
        while (remaining() > 0) {
            epoch += 1;
            Rng rng(derive_seed(seed, kTagSftShuffle, epoch));
            rng.shuffle(order);
            const std::size_t m =
                std::min<std::size_t>(order.size(), static_cast<std::size_t>(remaining()));
            SftBatch batch;
            batch.reserve(m);
            for (std::size_t i = 0; i < m; ++i) {
                const SftExample& ex = pool[order[i]];
                batch.emplace_back(&suite.by_id(ex.id), ex.target);
            }
            params = sft_step(params, batch, config.lr_sft);
            result.budget.grad_touches += static_cast<std::uint64_t>(m);
            result.update_log.push_back({rows_emitted + 1, Phase::SFT, 'S'});
            check_finite(params, "SFT update in baseline epoch " + std::to_string(epoch));

            const double nll = mean_nll(params);
            if (nll > initial_nll * 1.1 + 1e-12) {
                throw ContractError("sft divergence in baseline epoch " + std::to_string(epoch));
            }

            // Three evenly spaced history rows over the budget.
            while (rows_emitted < 3 &&
                   result.budget.total() >= (target_total * (rows_emitted + 1)) / 3) {
                DifficultyBuffer empty_buffer(suite, config.stagnation);
                PhaseRow row = make_row(config, suite, split, params, empty_buffer,
                                        result.budget, rows_emitted + 1, Phase::SFT);
                row.weak_size = static_cast<int>(pool.size());
                result.history.push_back(row);
                rows_emitted += 1;
                if (checkpoint) checkpoint(rows_emitted, Phase::SFT, params);
            }
        }
    }

    const std::uint64_t spent = result.budget.total();
    const double mismatch =
        std::abs(static_cast<double>(spent) - static_cast<double>(target_total)) /
        static_cast<double>(target_total);
    if (mismatch > 0.01) {
        throw ContractError("run_baseline: budget mismatch of " + std::to_string(mismatch * 100) +
                            "% against the matched run");
    }

    result.params = std::move(params);
    return result;
}

}  // namespace dppo
