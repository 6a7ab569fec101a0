#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dppo/config.hpp"
#include "dppo/metaloop.hpp"

namespace dppo {

// Per-seed outcome of one mode's run.
struct SeedOutcome {
    std::uint64_t seed = 0;
    double initial_heldout_embodied = 0.0;
    double initial_heldout_general = 0.0;
    double final_heldout_embodied = 0.0;
    double final_heldout_general = 0.0;
    std::array<double, kSkillCount> final_heldout_by_skill{};
    BudgetMeter budget;
    bool aborted = false;
    LoopHistory history;
};

struct ModeReport {
    std::string mode;
    std::vector<SeedOutcome> outcomes;

    double mean_final_embodied() const;
    double std_final_embodied() const;
    double mean_general_drop() const;  // initial - final, averaged over seeds
    double std_general_drop() const;
};

// Runs every seed of `config.mode` into out_dir/<mode>/seed_<s>/ (history,
// rollout log, per-phase checkpoints, stats, summary; a partial-run marker
// survives aborted runs). Returns the aggregate; also writes
// out_dir/<mode>/report.csv. Byte-identical outputs for identical configs.
ModeReport run_mode(const ExperimentConfig& config);

// Convenience used by tests and the acceptance battery: run one seed fully
// in memory (no files) and return the outcome.
SeedOutcome run_seed_in_memory(const ExperimentConfig& config, const std::string& mode,
                               std::uint64_t seed);

// CLI entry points; return process exit codes (0 ok, 2 config error,
// 1 other failure).
int cmd_generate(const std::string& config_path, const std::string& out_path);
int cmd_run(const std::string& config_path, const std::optional<std::string>& out_override,
            const std::optional<std::string>& mode_override,
            const std::optional<std::vector<std::uint64_t>>& seeds_override,
            const std::optional<int>& loops_override);
int cmd_report(const std::string& run_dir);
int cmd_prefcheck(const std::string& out_dir, std::uint64_t seed);

}  // namespace dppo
