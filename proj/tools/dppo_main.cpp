#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dppo/experiment.hpp"
#include "dppo/io.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    for (const std::string& field : dppo::split_fields(text, ',')) {
        seeds.push_back(static_cast<std::uint64_t>(dppo::parse_int(field)));
    }
    return seeds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dppo: deliberate-practice policy optimization on a synthetic task suite"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::string mode;
    std::string seeds_text;
    int loops = -1;

    CLI::App* generate = app.add_subcommand("generate", "write the task suite file for a config");
    generate->add_option("--config", config_path, "experiment config (JSON)")->required();
    generate->add_option("--out", out_path, "output suite file")->required();

    CLI::App* run = app.add_subcommand("run", "run the configured mode for every seed");
    run->add_option("--config", config_path, "experiment config (JSON)")->required();
    run->add_option("--out", out_path, "output directory (overrides config)");
    run->add_option("--mode", mode, "dppo | rl_only | sft_only | prefcheck (overrides config)");
    run->add_option("--seeds", seeds_text, "comma-separated seed list (overrides config)");
    run->add_option("--loops", loops, "metaloop count K (overrides config)");

    CLI::App* report = app.add_subcommand("report", "aggregate comparison tables for a run dir");
    report->add_option("--out", out_path, "run directory to summarize")->required();

    CLI::App* prefcheck =
        app.add_subcommand("prefcheck", "run the preference-learning verification battery");
    prefcheck->add_option("--out", out_path, "output directory for the report CSV");
    prefcheck->add_option("--seeds", seeds_text, "comma-separated seed list");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) {
            return dppo::cmd_generate(config_path, out_path);
        }
        if (run->parsed()) {
            std::optional<std::string> out_override;
            std::optional<std::string> mode_override;
            std::optional<std::vector<std::uint64_t>> seeds_override;
            std::optional<int> loops_override;
            if (!out_path.empty()) out_override = out_path;
            if (!mode.empty()) mode_override = mode;
            if (!seeds_text.empty()) seeds_override = parse_seed_list(seeds_text);
            if (loops >= 0) loops_override = loops;
            return dppo::cmd_run(config_path, out_override, mode_override, seeds_override,
                                 loops_override);
        }
        if (report->parsed()) {
            return dppo::cmd_report(out_path);
        }
        if (prefcheck->parsed()) {
            const std::string dir = out_path.empty() ? "runs/prefcheck" : out_path;
            std::vector<std::uint64_t> seeds = {1};
            if (!seeds_text.empty()) seeds = parse_seed_list(seeds_text);
            int worst = 0;
            for (const std::uint64_t seed : seeds) {
                worst = std::max(worst, dppo::cmd_prefcheck(dir, seed));
            }
            return worst;
        }
    } catch (const dppo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
