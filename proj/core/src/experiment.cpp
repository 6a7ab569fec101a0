#include "dppo/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>

#include "dppo/io.hpp"
#include "dppo/prefcheck.hpp"
#include "dppo/rng.hpp"

namespace fs = std::filesystem;

namespace dppo {
namespace {

constexpr std::uint64_t kTagPretrain = 0x70726574'7261696eULL;

const char* kTrainingModes[] = {"dppo", "rl_only", "sft_only"};

struct SeedRun {
    SeedOutcome outcome;
    PolicyParams params;
};

SeedRun run_seed_full(const ExperimentConfig& config, const std::string& mode,
                      std::uint64_t seed, const RolloutSink& sink,
                      const CheckpointHook& checkpoint) {
    const SampleSet suite = generate_suite(config.suite);
    const EvalSplit split = make_split(suite, config.holdout_fraction, config.split_seed);

    // Shared general-competence bootstrap: every mode starts from the same
    // seed-specific base policy, so held-out deltas measure the training
    // method, not the initialization.
    PolicyParams params(suite.feature_dim(), suite.answer_count());
    if (config.pretrain_epochs > 0) {
        const std::vector<SftExample> base = teacher_examples(suite, split.train_general);
        params = fit_supervised(config.loop, suite, base, std::move(params),
                                config.pretrain_epochs, config.loop.lr_sft,
                                derive_seed(seed, kTagPretrain), nullptr);
    }

    SeedRun run;
    run.outcome.seed = seed;
    run.outcome.initial_heldout_embodied =
        evaluate_success(config.loop.reward, params, suite, split.heldout_embodied);
    run.outcome.initial_heldout_general =
        evaluate_success(config.loop.reward, params, suite, split.heldout_general);

    MetaloopResult result;
    if (mode == "dppo") {
        result = run_metaloop(config.loop, suite, split, params, seed, sink, checkpoint);
    } else {
        const BaselineMode bmode =
            (mode == "rl_only") ? BaselineMode::RlOnly : BaselineMode::SftOnly;
        // Budget parity: measure the matched metaloop run silently, then give
        // the baseline the same total to spend.
        const MetaloopResult matched =
            run_metaloop(config.loop, suite, split, params, seed, nullptr, nullptr);
        result = run_baseline(bmode, config.loop, suite, split, params, seed, matched.budget,
                              sink, checkpoint);
    }

    run.outcome.final_heldout_embodied =
        evaluate_success(config.loop.reward, result.params, suite, split.heldout_embodied);
    run.outcome.final_heldout_general =
        evaluate_success(config.loop.reward, result.params, suite, split.heldout_general);
    run.outcome.final_heldout_by_skill = evaluate_success_by_skill(
        config.loop.reward, result.params, suite, split.heldout_embodied);
    run.outcome.budget = result.budget;
    run.outcome.history = std::move(result.history);
    run.params = std::move(result.params);
    return run;
}

std::map<std::string, std::string> summary_of(const std::string& mode,
                                              const SeedOutcome& outcome) {
    std::map<std::string, std::string> kv;
    kv["mode"] = mode;
    kv["seed"] = std::to_string(outcome.seed);
    kv["aborted"] = outcome.aborted ? "1" : "0";
    kv["initial_heldout_embodied"] = format_double(outcome.initial_heldout_embodied);
    kv["initial_heldout_general"] = format_double(outcome.initial_heldout_general);
    kv["final_heldout_embodied"] = format_double(outcome.final_heldout_embodied);
    kv["final_heldout_general"] = format_double(outcome.final_heldout_general);
    for (int k = 0; k < kSkillCount; ++k) {
        kv[std::string("final_heldout_") + skill_name(static_cast<SkillDimension>(k))] =
            format_double(outcome.final_heldout_by_skill[static_cast<std::size_t>(k)]);
    }
    kv["budget_rollouts"] = std::to_string(outcome.budget.rollouts);
    kv["budget_grad_touches"] = std::to_string(outcome.budget.grad_touches);
    kv["budget_total"] = std::to_string(outcome.budget.total());
    kv["history_rows"] = std::to_string(outcome.history.size());
    return kv;
}

void write_mode_report(const std::string& path, const ModeReport& report) {
    std::string csv =
        "mode,seed,initial_heldout_embodied,initial_heldout_general,final_heldout_embodied,"
        "final_heldout_general,general_drop,budget_rollouts,budget_grad_touches,budget_total,"
        "aborted\n";
    for (const SeedOutcome& o : report.outcomes) {
        csv += report.mode;
        csv += ',' + std::to_string(o.seed);
        csv += ',' + format_double(o.initial_heldout_embodied);
        csv += ',' + format_double(o.initial_heldout_general);
        csv += ',' + format_double(o.final_heldout_embodied);
        csv += ',' + format_double(o.final_heldout_general);
        csv += ',' + format_double(o.initial_heldout_general - o.final_heldout_general);
        csv += ',' + std::to_string(o.budget.rollouts);
        csv += ',' + std::to_string(o.budget.grad_touches);
        csv += ',' + std::to_string(o.budget.total());
        csv += o.aborted ? ",1\n" : ",0\n";
    }
    const bool any_completed =
        std::any_of(report.outcomes.begin(), report.outcomes.end(),
                    [](const SeedOutcome& o) { return !o.aborted; });
    if (any_completed) {
        csv += report.mode + ",mean,,," + format_double(report.mean_final_embodied()) + ",,"
               + format_double(report.mean_general_drop()) + ",,,,\n";
        csv += report.mode + ",std,,," + format_double(report.std_final_embodied()) + ",,"
               + format_double(report.std_general_drop()) + ",,,,\n";
    }
    write_file(path, csv);
}

ModeReport run_prefcheck_mode(const ExperimentConfig& config) {
    ModeReport report;
    report.mode = "prefcheck";
    const fs::path mode_dir = fs::path(config.out_dir) / "prefcheck";
    fs::create_directories(mode_dir);
    std::string aggregate = "seed,name,statistic,threshold,pass\n";
    for (const std::uint64_t seed : config.seeds) {
        const fs::path seed_dir = mode_dir / ("seed_" + std::to_string(seed));
        fs::create_directories(seed_dir);
        const std::vector<CheckRow> rows = run_prefcheck_suite(seed);
        std::string csv = "name,statistic,threshold,pass\n";
        int passed = 0;
        for (const CheckRow& row : rows) {
            const std::string line = row.name + ',' + format_double(row.statistic) + ',' +
                                     format_double(row.threshold) + ',' +
                                     (row.pass ? "1" : "0") + "\n";
            csv += line;
            aggregate += std::to_string(seed) + ',' + line;
            if (row.pass) ++passed;
        }
        write_file((seed_dir / "prefcheck.csv").string(), csv);
        SeedOutcome outcome;
        outcome.seed = seed;
        outcome.final_heldout_embodied =
            rows.empty() ? 0.0 : static_cast<double>(passed) / static_cast<double>(rows.size());
        outcome.aborted = passed != static_cast<int>(rows.size());
        report.outcomes.push_back(outcome);
    }
    write_file((mode_dir / "report.csv").string(), aggregate);
    return report;
}

double mean_over(const std::vector<double>& xs) {
    double total = 0.0;
    for (double x : xs) total += x;
    return total / static_cast<double>(xs.size());
}

double pop_std_over(const std::vector<double>& xs) {
    const double m = mean_over(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(xs.size()));
}

std::vector<double> completed_values(const ModeReport& report,
                                     double (*pick)(const SeedOutcome&)) {
    std::vector<double> xs;
    for (const SeedOutcome& o : report.outcomes) {
        if (!o.aborted) xs.push_back(pick(o));
    }
    if (xs.empty()) throw ContractError("mode report: no completed seed runs to aggregate");
    return xs;
}

}  // namespace

double ModeReport::mean_final_embodied() const {
    return mean_over(completed_values(*this, [](const SeedOutcome& o) {
        return o.final_heldout_embodied;
    }));
}

double ModeReport::std_final_embodied() const {
    return pop_std_over(completed_values(*this, [](const SeedOutcome& o) {
        return o.final_heldout_embodied;
    }));
}

double ModeReport::mean_general_drop() const {
    return mean_over(completed_values(*this, [](const SeedOutcome& o) {
        return o.initial_heldout_general - o.final_heldout_general;
    }));
}

double ModeReport::std_general_drop() const {
    return pop_std_over(completed_values(*this, [](const SeedOutcome& o) {
        return o.initial_heldout_general - o.final_heldout_general;
    }));
}

ModeReport run_mode(const ExperimentConfig& config) {
    config.validate();
    if (config.mode == "prefcheck") return run_prefcheck_mode(config);

    ModeReport report;
    report.mode = config.mode;
    const fs::path mode_dir = fs::path(config.out_dir) / config.mode;
    fs::create_directories(mode_dir);

    for (const std::uint64_t seed : config.seeds) {
        const fs::path seed_dir = mode_dir / ("seed_" + std::to_string(seed));
        fs::create_directories(seed_dir);
        const fs::path marker = seed_dir / "partial_run.marker";
        write_file(marker.string(), "run started; removed on clean completion\n");

        SeedOutcome outcome;
        outcome.seed = seed;
        try {
            RolloutLogWriter log((seed_dir / "rollouts.log").string());
            const RolloutSink sink = [&log](const RolloutRecord& r) { log.write(r); };
            const CheckpointHook hook = [&seed_dir](int loop, Phase phase,
                                                    const PolicyParams& params) {
                write_checkpoint((seed_dir / ("checkpoint_loop" + std::to_string(loop) + "_" +
                                              phase_name(phase) + ".txt"))
                                     .string(),
                                 params);
            };
            SeedRun run = run_seed_full(config, config.mode, seed, sink, hook);
            log.flush();
            outcome = std::move(run.outcome);
            write_checkpoint((seed_dir / "checkpoint_final.txt").string(), run.params);
            write_history_csv((seed_dir / "history.csv").string(), outcome.history);
            write_summary((seed_dir / "summary.txt").string(), summary_of(config.mode, outcome));
            fs::remove(marker);
        } catch (const ContractError& e) {
            // Mid-run abort: the marker file stays behind and the summary
            // records the reason; the rollout log keeps its parseable prefix.
            outcome.aborted = true;
            auto kv = summary_of(config.mode, outcome);
            kv["abort_reason"] = e.what();
            write_summary((seed_dir / "summary.txt").string(), kv);
        }
        report.outcomes.push_back(outcome);
    }

    write_mode_report((mode_dir / "report.csv").string(), report);
    return report;
}

SeedOutcome run_seed_in_memory(const ExperimentConfig& config, const std::string& mode,
                               std::uint64_t seed) {
    return run_seed_full(config, mode, seed, nullptr, nullptr).outcome;
}

int cmd_generate(const std::string& config_path, const std::string& out_path) {
    try {
        const ExperimentConfig config = load_experiment_config(config_path);
        const SampleSet suite = generate_suite(config.suite);
        const fs::path out(out_path);
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        write_suite(out_path, suite);
        std::cout << "wrote " << suite.size() << " samples to " << out_path << "\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_run(const std::string& config_path, const std::optional<std::string>& out_override,
            const std::optional<std::string>& mode_override,
            const std::optional<std::vector<std::uint64_t>>& seeds_override,
            const std::optional<int>& loops_override) {
    ExperimentConfig config;
    try {
        config = load_experiment_config(config_path);
        if (out_override) config.out_dir = *out_override;
        if (mode_override) config.mode = *mode_override;
        if (seeds_override) config.seeds = *seeds_override;
        if (loops_override) config.loop.loops = *loops_override;
        config.validate();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        fs::create_directories(config.out_dir);
        write_file((fs::path(config.out_dir) / "config_resolved.json").string(),
                   experiment_config_to_json(config));
        const ModeReport report = run_mode(config);
        bool all_ok = true;
        for (const SeedOutcome& o : report.outcomes) {
            if (config.mode == "prefcheck") {
                std::cout << "seed " << o.seed << ": prefcheck pass fraction "
                          << format_double(o.final_heldout_embodied) << "\n";
            } else {
                std::cout << "seed " << o.seed << ": "
                          << (o.aborted
                                  ? "aborted"
                                  : "heldout embodied " +
                                        format_double(o.final_heldout_embodied) +
                                        ", heldout general " +
                                        format_double(o.final_heldout_general) + ", budget " +
                                        std::to_string(o.budget.total()))
                          << "\n";
            }
            all_ok = all_ok && !o.aborted;
        }
        std::cout << "report: "
                  << (fs::path(config.out_dir) / config.mode / "report.csv").string() << "\n";
        return all_ok ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_report(const std::string& run_dir) {
    try {
        if (!fs::is_directory(run_dir)) {
            std::cerr << "error: not a directory: " << run_dir << "\n";
            return 1;
        }
        std::string comparison =
            "mode,present,seeds,final_embodied_mean,final_embodied_std,general_before_mean,"
            "general_after_mean,retention_mean,retention_std\n";
        std::string curves =
            "mode,seed,row,loop,phase,heldout_embodied,heldout_general,rollouts_used,"
            "grad_touches_used\n";

        for (const char* mode : kTrainingModes) {
            const fs::path mode_dir = fs::path(run_dir) / mode;
            std::vector<std::uint64_t> seeds;
            if (fs::is_directory(mode_dir)) {
                for (const auto& entry : fs::directory_iterator(mode_dir)) {
                    const std::string name = entry.path().filename().string();
                    if (entry.is_directory() && name.rfind("seed_", 0) == 0) {
                        seeds.push_back(static_cast<std::uint64_t>(parse_int(name.substr(5))));
                    }
                }
            }
            std::sort(seeds.begin(), seeds.end());

            std::vector<double> finals, befores, afters;
            for (const std::uint64_t seed : seeds) {
                const fs::path seed_dir = mode_dir / ("seed_" + std::to_string(seed));
                if (!fs::exists(seed_dir / "summary.txt")) continue;
                const auto kv = read_summary((seed_dir / "summary.txt").string());
                if (kv.count("aborted") && kv.at("aborted") == "1") continue;
                finals.push_back(parse_double(kv.at("final_heldout_embodied")));
                befores.push_back(parse_double(kv.at("initial_heldout_general")));
                afters.push_back(parse_double(kv.at("final_heldout_general")));

                const LoopHistory history =
                    read_history_csv((seed_dir / "history.csv").string());
                for (std::size_t i = 0; i < history.size(); ++i) {
                    const PhaseRow& row = history[i];
                    curves += std::string(mode) + ',' + std::to_string(seed) + ',' +
                              std::to_string(i + 1) + ',' + std::to_string(row.loop) + ',' +
                              phase_name(row.phase) + ',' +
                              format_double(row.heldout_embodied) + ',' +
                              format_double(row.heldout_general) + ',' +
                              std::to_string(row.rollouts_used) + ',' +
                              std::to_string(row.grad_touches_used) + '\n';
                }
            }

            if (finals.empty()) {
                comparison += std::string(mode) + ",0,0,,,,,,\n";
                continue;
            }
            std::vector<double> retention(finals.size());
            for (std::size_t i = 0; i < finals.size(); ++i) retention[i] = afters[i] - befores[i];
            comparison += std::string(mode) + ",1," + std::to_string(finals.size()) + ',' +
                          format_double(mean_over(finals)) + ',' +
                          format_double(pop_std_over(finals)) + ',' +
                          format_double(mean_over(befores)) + ',' +
                          format_double(mean_over(afters)) + ',' +
                          format_double(mean_over(retention)) + ',' +
                          format_double(pop_std_over(retention)) + '\n';
        }

        write_file((fs::path(run_dir) / "comparison.csv").string(), comparison);
        write_file((fs::path(run_dir) / "curves.csv").string(), curves);
        std::cout << comparison;
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_prefcheck(const std::string& out_dir, std::uint64_t seed) {
    try {
        const std::vector<CheckRow> rows = run_prefcheck_suite(seed);
        fs::create_directories(out_dir);
        std::string csv = "name,statistic,threshold,pass\n";
        bool all_pass = true;
        for (const CheckRow& row : rows) {
            csv += row.name + ',' + format_double(row.statistic) + ',' +
                   format_double(row.threshold) + ',' + (row.pass ? "1" : "0") + '\n';
            std::cout << (row.pass ? "[PASS] " : "[FAIL] ") << row.name
                      << " statistic=" << format_double(row.statistic)
                      << " threshold=" << format_double(row.threshold) << "\n";
            all_pass = all_pass && row.pass;
        }
        write_file((fs::path(out_dir) / ("prefcheck_seed_" + std::to_string(seed) + ".csv"))
                       .string(),
                   csv);
        return all_pass ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace dppo
