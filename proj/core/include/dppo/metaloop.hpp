#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dppo/curation.hpp"
#include "dppo/policy.hpp"
#include "dppo/rewards.hpp"
#include "dppo/taskgen.hpp"

namespace dppo {

enum class Phase { RL, SFT };

const char* phase_name(Phase phase);

struct LoopConfig {
    int loops = 3;                // alternating (RL, SFT) pairs to run
    int rollouts_per_sample = 8;  // T
    int rl_epoch_cap = 400;
    int sft_epochs = 40;
    double lr_rl = 0.3;
    double lr_sft = 0.85;
    double gen_replay_fraction = 0.5;
    RewardSpec reward;
    StagnationConfig stagnation;
    // Optional trailing RL phase after the last loop (off by default; when
    // on, the history gains one extra RL row).
    bool final_rl_phase = false;
    // Optional per-loop difficulty ceiling on RL candidates; empty disables.
    std::vector<double> difficulty_ceiling;

    void validate() const;
};

// Train/held-out ids per pool; held-out samples are never trained on.
struct EvalSplit {
    std::vector<SampleId> train_embodied;
    std::vector<SampleId> train_general;
    std::vector<SampleId> heldout_embodied;
    std::vector<SampleId> heldout_general;
};

// Stratified by (skill, pool): holdout_fraction of each stratum is held out.
EvalSplit make_split(const SampleSet& suite, double holdout_fraction, std::uint64_t seed);

struct SftExample {
    SampleId id = 0;
    StructuredResponse target;
};

// The curated post-RL training sets: weak samples with teacher targets,
// related same-skill embodied samples, and the general-pool replay draw.
// `sft` is their id-disjoint union in that order.
struct DatasetPartition {
    std::vector<SampleId> rl_ids;
    std::vector<SftExample> weak;
    std::vector<SftExample> related;
    std::vector<SftExample> replay;
    std::vector<SftExample> sft;
};

struct BudgetMeter {
    std::uint64_t rollouts = 0;
    std::uint64_t grad_touches = 0;

    std::uint64_t total() const { return rollouts + grad_touches; }
};

// One history row per completed phase.
struct PhaseRow {
    int loop = 0;
    Phase phase = Phase::RL;
    double heldout_embodied = 0.0;
    double heldout_general = 0.0;
    std::array<double, kSkillCount> train_rate_by_skill{};
    std::array<double, kSkillCount> heldout_by_skill{};
    std::array<double, kSkillCount> stagnation_by_skill{};
    // RL rows: which tasks crossed the stagnation threshold before the
    // epoch cap ended the phase for them.
    std::array<bool, kSkillCount> task_stopped_early{};
    int rl_size = 0;
    int weak_size = 0;
    int related_size = 0;
    int replay_size = 0;
    int rl_epochs_run = 0;
    std::uint64_t rollouts_used = 0;      // cumulative at row emission
    std::uint64_t grad_touches_used = 0;  // cumulative at row emission
};

using LoopHistory = std::vector<PhaseRow>;

// Every parameter update tagged with the phase that issued it; RL phases
// must only emit policy-gradient updates and SFT phases only supervised
// ones.
struct UpdateLogEntry {
    int loop = 0;
    Phase phase = Phase::RL;
    char kind = 'G';  // 'G' policy-gradient, 'S' supervised
};

struct MetaloopResult {
    PolicyParams params;
    LoopHistory history;
    BudgetMeter budget;
    std::vector<UpdateLogEntry> update_log;
};

using CheckpointHook = std::function<void(int loop, Phase phase, const PolicyParams&)>;

// --- expected-success evaluation (deterministic, rollout-free) -----------

// P(success) = format probability x probability mass of the answers that
// would count as a success for this sample.
double expected_success(const RewardSpec& spec, const PolicyParams& params,
                        const SampleInstance& sample);

double evaluate_success(const RewardSpec& spec, const PolicyParams& params,
                        const SampleSet& suite, const std::vector<SampleId>& ids);

std::array<double, kSkillCount> evaluate_success_by_skill(const RewardSpec& spec,
                                                          const PolicyParams& params,
                                                          const SampleSet& suite,
                                                          const std::vector<SampleId>& ids);

// --- phases ---------------------------------------------------------------

struct RlPhaseReport {
    std::vector<SampleId> rl_ids;
    int epochs_run = 0;
    std::array<double, kSkillCount> stagnation_at_stop{};
    std::array<bool, kSkillCount> stopped_before_cap{};
    bool skipped = false;  // empty update set after rebalancing
};

// Weakness detection + refinement: a diagnostic round of T rollouts per
// candidate, rebalancing into the update set, then group-standardized
// policy-gradient epochs with fresh rollouts, recomputing the per-sample
// statistics each epoch and halting each task once its stagnation crosses
// the threshold (or at the epoch cap).
RlPhaseReport rl_phase(const LoopConfig& config, const SampleSet& suite,
                       const std::vector<SampleId>& candidates, int loop_index,
                       DifficultyBuffer& buffer, PolicyParams& params, BudgetMeter& budget,
                       std::uint64_t seed, std::vector<UpdateLogEntry>* update_log);

// weak = fully-failed samples with teacher targets; related = other embodied
// train samples sharing a weak skill; replay = uniform seeded draw of
// floor(gen_replay_fraction * |weak u related|) general train samples.
DatasetPartition build_sft_dataset(const LoopConfig& config, const SampleSet& suite,
                                   const EvalSplit& split, const DifficultyBuffer& buffer,
                                   const std::vector<SampleId>& rl_ids, std::uint64_t seed);

struct SftPhaseReport {
    double initial_nll = 0.0;
    double final_nll = 0.0;
    int epochs_run = 0;
};

// Supervised passes over the curated set (seeded shuffle each epoch, one
// full-batch step per pass). A mean-NLL rise above 10% of the initial value
// aborts the run.
SftPhaseReport sft_phase(const LoopConfig& config, const SampleSet& suite,
                         const DatasetPartition& partition, int loop_index, PolicyParams& params,
                         BudgetMeter& budget, std::uint64_t seed,
                         std::vector<UpdateLogEntry>* update_log);

// --- drivers ---------------------------------------------------------------

// Runs `loops` alternating (RL, SFT) pairs with a buffer reset after each
// pair; emits exactly 2*loops history rows (plus one with the optional
// trailing RL phase). Deterministic for fixed inputs.
MetaloopResult run_metaloop(const LoopConfig& config, const SampleSet& suite,
                            const EvalSplit& split, PolicyParams params, std::uint64_t seed,
                            const RolloutSink& sink = nullptr,
                            const CheckpointHook& checkpoint = nullptr);

enum class BaselineMode { RlOnly, SftOnly };

// Single-method baselines consuming the same total update budget (rollouts +
// per-example gradient touches) as the matched metaloop run, within 1%.
// rl_only repeats RL phases (with rebalancing and stagnation stops); sft_only
// spends the whole budget on teacher-target supervision over the full
// embodied train pool.
MetaloopResult run_baseline(BaselineMode mode, const LoopConfig& config, const SampleSet& suite,
                            const EvalSplit& split, PolicyParams params, std::uint64_t seed,
                            const BudgetMeter& target, const RolloutSink& sink = nullptr,
                            const CheckpointHook& checkpoint = nullptr);

// Plain supervised fitting (used for the shared general-competence
// bootstrap): epochs full-batch steps on the given examples.
PolicyParams fit_supervised(const LoopConfig& config, const SampleSet& suite,
                            const std::vector<SftExample>& examples, PolicyParams params,
                            int epochs, double lr, std::uint64_t seed,
                            BudgetMeter* budget = nullptr);

std::vector<SftExample> teacher_examples(const SampleSet& suite,
                                         const std::vector<SampleId>& ids);

}  // namespace dppo
