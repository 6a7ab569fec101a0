// Config loading: defaults, JSON overrides, error reporting, canonical echo.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "dppo/config.hpp"
#include "dppo/io.hpp"
#include "dppo/types.hpp"

using namespace dppo;

namespace {

std::string message_of(const std::string& json_text) {
    try {
        parse_experiment_config(json_text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("default_experiment_config carries the tuned defaults") {
    const ExperimentConfig config = default_experiment_config();
    CHECK(config.suite.seed == 7);
    CHECK(config.suite.feature_dim == 22);
    CHECK(config.suite.answer_count == 4);
    CHECK(config.suite.samples_per_skill == 200);
    CHECK(config.suite.band_threshold == doctest::Approx(0.57));
    CHECK(config.suite.noise_sigma == doctest::Approx(0.1));
    CHECK(config.suite.hard_label_noise == doctest::Approx(0.4));
    CHECK(config.suite.easy_label_noise == doctest::Approx(0.0));
    CHECK(config.suite.general_coupling == doctest::Approx(0.6));
    CHECK(config.loop.loops == 3);
    CHECK(config.loop.rollouts_per_sample == 8);
    CHECK(config.loop.rl_epoch_cap == 400);
    CHECK(config.loop.sft_epochs == 40);
    CHECK(config.loop.lr_rl == doctest::Approx(0.3));
    CHECK(config.loop.lr_sft == doctest::Approx(0.85));
    CHECK(config.loop.gen_replay_fraction == doctest::Approx(0.5));
    CHECK_FALSE(config.loop.final_rl_phase);
    CHECK(config.loop.difficulty_ceiling.empty());
    CHECK(config.loop.reward.lambda_format == doctest::Approx(0.1));
    CHECK(config.loop.reward.lambda_task == doctest::Approx(0.9));
    CHECK(config.loop.reward.numeric_success_threshold == doctest::Approx(0.75));
    CHECK(config.loop.stagnation.epsilon == doctest::Approx(0.1));
    CHECK(config.loop.stagnation.threshold == doctest::Approx(0.7));
    CHECK(config.holdout_fraction == doctest::Approx(0.2));
    CHECK(config.split_seed == 17);
    CHECK(config.pretrain_epochs == 150);
    CHECK(config.beta == doctest::Approx(1.0));
    CHECK(config.mode == "dppo");
    CHECK(config.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
    CHECK(config.out_dir == "runs/out");
    CHECK_NOTHROW(config.validate());
}

TEST_CASE("an empty object parses to the defaults") {
    const ExperimentConfig parsed = parse_experiment_config("{}");
    CHECK(experiment_config_to_json(parsed) ==
          experiment_config_to_json(default_experiment_config()));
}

TEST_CASE("nested keys override only what they name") {
    const ExperimentConfig config = parse_experiment_config(R"({
        "suite": {"band_threshold": 0.6, "easy_skill": "TaskPlanning"},
        "loop": {"sft_epochs": 12, "stagnation": {"epsilon": 0.15},
                 "reward": {"lambda_task": 0.7}, "difficulty_ceiling": [0.4, 0.8]},
        "mode": "rl_only",
        "seeds": [11, 12],
        "holdout_fraction": 0.25
    })");
    CHECK(config.suite.band_threshold == doctest::Approx(0.6));
    CHECK(config.suite.easy_skill == static_cast<int>(SkillDimension::TaskPlanning));
    CHECK(config.suite.feature_dim == 22);  // untouched default
    CHECK(config.loop.sft_epochs == 12);
    CHECK(config.loop.stagnation.epsilon == doctest::Approx(0.15));
    CHECK(config.loop.stagnation.threshold == doctest::Approx(0.7));
    CHECK(config.loop.reward.lambda_task == doctest::Approx(0.7));
    CHECK(config.loop.reward.lambda_format == doctest::Approx(0.1));
    CHECK(config.loop.difficulty_ceiling == std::vector<double>{0.4, 0.8});
    CHECK(config.mode == "rl_only");
    CHECK(config.seeds == std::vector<std::uint64_t>{11, 12});
    CHECK(config.holdout_fraction == doctest::Approx(0.25));
}

TEST_CASE("easy_skill accepts either the name or the index") {
    CHECK(parse_experiment_config(R"({"suite": {"easy_skill": 1}})").suite.easy_skill == 1);
    CHECK(parse_experiment_config(R"({"suite": {"easy_skill": "CountingDistance"}})")
              .suite.easy_skill == 1);
    CHECK(message_of(R"({"suite": {"easy_skill": 1.5}})").find("easy_skill") !=
          std::string::npos);
}

TEST_CASE("unknown keys raise ConfigError naming the offending key") {
    CHECK(message_of(R"({"bogus_key": 1})").find("bogus_key") != std::string::npos);
    CHECK(message_of(R"({"suite": {"band_treshold": 0.5}})").find("suite.band_treshold") !=
          std::string::npos);
    CHECK(message_of(R"({"loop": {"epochs": 3}})").find("loop.epochs") != std::string::npos);
    CHECK(message_of(R"({"loop": {"reward": {"lambda": 1.0}}})").find("loop.reward.lambda") !=
          std::string::npos);
    CHECK(message_of(R"({"loop": {"stagnation": {"eps": 0.1}}})")
              .find("loop.stagnation.eps") != std::string::npos);
}

TEST_CASE("ill-typed values raise ConfigError naming the key") {
    CHECK(message_of(R"({"suite": {"feature_dim": "wide"}})").find("suite.feature_dim") !=
          std::string::npos);
    CHECK(message_of(R"({"loop": {"final_rl_phase": 1}})").find("loop.final_rl_phase") !=
          std::string::npos);
    CHECK(message_of(R"({"loop": {"difficulty_ceiling": 0.5}})")
              .find("loop.difficulty_ceiling") != std::string::npos);
    CHECK(message_of(R"({"beta": "high"})").find("beta") != std::string::npos);
    CHECK(message_of(R"({"seeds": []})").find("seeds") != std::string::npos);
    CHECK(message_of(R"({"seeds": [-3]})").find("seeds") != std::string::npos);
    CHECK(message_of(R"({"split_seed": -1})").find("split_seed") != std::string::npos);
}

TEST_CASE("malformed JSON and bad roots are ConfigError") {
    CHECK_THROWS_AS(parse_experiment_config("{"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("[1, 2]"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("42"), ConfigError);
}

TEST_CASE("parse runs full validation on the result") {
    CHECK_THROWS_AS(parse_experiment_config(R"({"holdout_fraction": 0.6})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"mode": "bogus"})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"suite": {"feature_dim": 8}})"), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(R"({"loop": {"rollouts_per_sample": 1}})"),
                    ConfigError);
}

TEST_CASE("the canonical echo round-trips through the parser") {
    ExperimentConfig config = default_experiment_config();
    config.suite.band_threshold = 0.61;
    config.loop.difficulty_ceiling = {0.3, 0.6, 0.9};
    config.mode = "sft_only";
    config.seeds = {42};
    const std::string echoed = experiment_config_to_json(config);
    const ExperimentConfig reparsed = parse_experiment_config(echoed);
    CHECK(experiment_config_to_json(reparsed) == echoed);
    CHECK(reparsed.suite.band_threshold == doctest::Approx(0.61));
    CHECK(reparsed.loop.difficulty_ceiling == config.loop.difficulty_ceiling);
}

TEST_CASE("the shipped default config file matches the built-in defaults") {
    const ExperimentConfig from_file =
        load_experiment_config(std::string(DPPO_SOURCE_DIR) + "/configs/default.json");
    CHECK(experiment_config_to_json(from_file) ==
          experiment_config_to_json(default_experiment_config()));
}

TEST_CASE("loading a missing config file reports an I/O error") {
    CHECK_THROWS_AS(load_experiment_config("/nonexistent/definitely_missing.json"), IoError);
}
