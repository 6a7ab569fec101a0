#include "dppo/config.hpp"

#include <set>

#include <json.hpp>

#include "dppo/io.hpp"

namespace dppo {
namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

[[noreturn]] void bad_type(const std::string& path, const char* want) {
    throw ConfigError("config key '" + path + "': expected " + want);
}

double get_double(const json& v, const std::string& path) {
    if (!v.is_number()) bad_type(path, "a number");
    return v.get<double>();
}

int get_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) bad_type(path, "an integer");
    return v.get<int>();
}

std::uint64_t get_u64(const json& v, const std::string& path) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        bad_type(path, "a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

bool get_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) bad_type(path, "a boolean");
    return v.get<bool>();
}

std::string get_string(const json& v, const std::string& path) {
    if (!v.is_string()) bad_type(path, "a string");
    return v.get<std::string>();
}

void check_keys(const json& obj, const std::string& prefix, const std::set<std::string>& known) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!known.count(key)) {
            throw ConfigError("unknown config key '" + prefix + key + "'");
        }
    }
}

void apply_suite(const json& obj, const std::string& prefix, SuiteConfig& suite) {
    if (!obj.is_object()) bad_type(prefix.empty() ? "suite" : prefix, "an object");
    check_keys(obj, prefix,
               {"seed", "feature_dim", "answer_count", "samples_per_skill", "general_fraction",
                "easy_label_noise", "hard_label_noise", "difficulty_min", "difficulty_max", "easy_skill",
                "easy_difficulty_max", "general_difficulty_max", "band_threshold", "signal_slope",
                "general_coupling", "noise_sigma", "value_range"});
    for (const auto& [key, v] : obj.items()) {
        const std::string path = prefix + key;
        if (key == "seed") suite.seed = get_u64(v, path);
        else if (key == "feature_dim") suite.feature_dim = get_int(v, path);
        else if (key == "answer_count") suite.answer_count = get_int(v, path);
        else if (key == "samples_per_skill") suite.samples_per_skill = get_int(v, path);
        else if (key == "general_fraction") suite.general_fraction = get_double(v, path);
        else if (key == "easy_label_noise") suite.easy_label_noise = get_double(v, path);
        else if (key == "hard_label_noise") suite.hard_label_noise = get_double(v, path);
        else if (key == "difficulty_min") suite.difficulty_min = get_double(v, path);
        else if (key == "difficulty_max") suite.difficulty_max = get_double(v, path);
        else if (key == "easy_skill") {
            // Accepts the skill name or its index.
            if (v.is_string()) {
                suite.easy_skill = static_cast<int>(skill_from_name(v.get<std::string>()));
            } else if (v.is_number_integer()) {
                suite.easy_skill = v.get<int>();
            } else {
                bad_type(path, "a skill name or index");
            }
        } else if (key == "easy_difficulty_max") suite.easy_difficulty_max = get_double(v, path);
        else if (key == "general_difficulty_max")
            suite.general_difficulty_max = get_double(v, path);
        else if (key == "band_threshold") suite.band_threshold = get_double(v, path);
        else if (key == "signal_slope") suite.signal_slope = get_double(v, path);
        else if (key == "general_coupling") suite.general_coupling = get_double(v, path);
        else if (key == "noise_sigma") suite.noise_sigma = get_double(v, path);
        else if (key == "value_range") suite.value_range = get_double(v, path);
    }
}

void apply_reward(const json& obj, const std::string& prefix, RewardSpec& reward) {
    if (!obj.is_object()) bad_type("loop.reward", "an object");
    check_keys(obj, prefix, {"lambda_format", "lambda_task", "numeric_success_threshold"});
    for (const auto& [key, v] : obj.items()) {
        const std::string path = prefix + key;
        if (key == "lambda_format") reward.lambda_format = get_double(v, path);
        else if (key == "lambda_task") reward.lambda_task = get_double(v, path);
        else if (key == "numeric_success_threshold")
            reward.numeric_success_threshold = get_double(v, path);
    }
}

void apply_stagnation(const json& obj, const std::string& prefix, StagnationConfig& stagnation) {
    if (!obj.is_object()) bad_type("loop.stagnation", "an object");
    check_keys(obj, prefix, {"epsilon", "threshold"});
    for (const auto& [key, v] : obj.items()) {
        const std::string path = prefix + key;
        if (key == "epsilon") stagnation.epsilon = get_double(v, path);
        else if (key == "threshold") stagnation.threshold = get_double(v, path);
    }
}

void apply_loop(const json& obj, const std::string& prefix, LoopConfig& loop) {
    if (!obj.is_object()) bad_type("loop", "an object");
    check_keys(obj, prefix,
               {"loops", "rollouts_per_sample", "rl_epoch_cap", "sft_epochs", "lr_rl", "lr_sft",
                "gen_replay_fraction", "final_rl_phase", "difficulty_ceiling", "reward",
                "stagnation"});
    for (const auto& [key, v] : obj.items()) {
        const std::string path = prefix + key;
        if (key == "loops") loop.loops = get_int(v, path);
        else if (key == "rollouts_per_sample") loop.rollouts_per_sample = get_int(v, path);
        else if (key == "rl_epoch_cap") loop.rl_epoch_cap = get_int(v, path);
        else if (key == "sft_epochs") loop.sft_epochs = get_int(v, path);
        else if (key == "lr_rl") loop.lr_rl = get_double(v, path);
        else if (key == "lr_sft") loop.lr_sft = get_double(v, path);
        else if (key == "gen_replay_fraction") loop.gen_replay_fraction = get_double(v, path);
        else if (key == "final_rl_phase") loop.final_rl_phase = get_bool(v, path);
        else if (key == "difficulty_ceiling") {
            if (!v.is_array()) bad_type(path, "an array of numbers");
            loop.difficulty_ceiling.clear();
            for (const auto& item : v) loop.difficulty_ceiling.push_back(get_double(item, path));
        } else if (key == "reward") {
            apply_reward(v, path + ".", loop.reward);
        } else if (key == "stagnation") {
            apply_stagnation(v, path + ".", loop.stagnation);
        }
    }
}

}  // namespace

void ExperimentConfig::validate() const {
    suite.validate();
    loop.validate();
    if (!(holdout_fraction > 0.0 && holdout_fraction <= 0.5)) {
        throw ConfigError("holdout_fraction: must be in (0, 0.5]");
    }
    if (pretrain_epochs < 0) throw ConfigError("pretrain_epochs: must be non-negative");
    if (!(beta > 0.0)) throw ConfigError("beta: must be positive");
    if (mode != "dppo" && mode != "rl_only" && mode != "sft_only" && mode != "prefcheck") {
        throw ConfigError("mode: must be one of dppo, rl_only, sft_only, prefcheck");
    }
    if (seeds.empty()) throw ConfigError("seeds: must be nonempty");
    if (out_dir.empty()) throw ConfigError("out_dir: must be nonempty");
}

ExperimentConfig default_experiment_config() { return ExperimentConfig{}; }

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config root: expected an object");

    ExperimentConfig config;
    check_keys(root, "",
               {"suite", "loop", "holdout_fraction", "split_seed", "pretrain_epochs", "beta",
                "mode", "seeds", "out_dir"});
    for (const auto& [key, v] : root.items()) {
        if (key == "suite") apply_suite(v, "suite.", config.suite);
        else if (key == "loop") apply_loop(v, "loop.", config.loop);
        else if (key == "holdout_fraction") config.holdout_fraction = get_double(v, key);
        else if (key == "split_seed") config.split_seed = get_u64(v, key);
        else if (key == "pretrain_epochs") config.pretrain_epochs = get_int(v, key);
        else if (key == "beta") config.beta = get_double(v, key);
        else if (key == "mode") config.mode = get_string(v, key);
        else if (key == "seeds") {
            if (!v.is_array() || v.empty()) bad_type(key, "a nonempty array of seeds");
            config.seeds.clear();
            for (const auto& item : v) config.seeds.push_back(get_u64(item, key));
        } else if (key == "out_dir") config.out_dir = get_string(v, key);
    }
    config.validate();
    return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return parse_experiment_config(read_file(path));
}

std::string experiment_config_to_json(const ExperimentConfig& config) {
    ojson suite;
    suite["seed"] = config.suite.seed;
    suite["feature_dim"] = config.suite.feature_dim;
    suite["answer_count"] = config.suite.answer_count;
    suite["samples_per_skill"] = config.suite.samples_per_skill;
    suite["general_fraction"] = config.suite.general_fraction;
    suite["easy_label_noise"] = config.suite.easy_label_noise;
    suite["hard_label_noise"] = config.suite.hard_label_noise;
    suite["difficulty_min"] = config.suite.difficulty_min;
    suite["difficulty_max"] = config.suite.difficulty_max;
    suite["easy_skill"] = skill_name(static_cast<SkillDimension>(config.suite.easy_skill));
    suite["easy_difficulty_max"] = config.suite.easy_difficulty_max;
    suite["general_difficulty_max"] = config.suite.general_difficulty_max;
    suite["band_threshold"] = config.suite.band_threshold;
    suite["signal_slope"] = config.suite.signal_slope;
    suite["general_coupling"] = config.suite.general_coupling;
    suite["noise_sigma"] = config.suite.noise_sigma;
    suite["value_range"] = config.suite.value_range;

    ojson reward;
    reward["lambda_format"] = config.loop.reward.lambda_format;
    reward["lambda_task"] = config.loop.reward.lambda_task;
    reward["numeric_success_threshold"] = config.loop.reward.numeric_success_threshold;

    ojson stagnation;
    stagnation["epsilon"] = config.loop.stagnation.epsilon;
    stagnation["threshold"] = config.loop.stagnation.threshold;

    ojson loop;
    loop["loops"] = config.loop.loops;
    loop["rollouts_per_sample"] = config.loop.rollouts_per_sample;
    loop["rl_epoch_cap"] = config.loop.rl_epoch_cap;
    loop["sft_epochs"] = config.loop.sft_epochs;
    loop["lr_rl"] = config.loop.lr_rl;
    loop["lr_sft"] = config.loop.lr_sft;
    loop["gen_replay_fraction"] = config.loop.gen_replay_fraction;
    loop["final_rl_phase"] = config.loop.final_rl_phase;
    loop["difficulty_ceiling"] = config.loop.difficulty_ceiling;
    loop["reward"] = reward;
    loop["stagnation"] = stagnation;

    ojson root;
    root["suite"] = suite;
    root["loop"] = loop;
    root["holdout_fraction"] = config.holdout_fraction;
    root["split_seed"] = config.split_seed;
    root["pretrain_epochs"] = config.pretrain_epochs;
    root["beta"] = config.beta;
    root["mode"] = config.mode;
    root["seeds"] = config.seeds;
    root["out_dir"] = config.out_dir;
    return root.dump(2) + "\n";
}

}  // namespace dppo
