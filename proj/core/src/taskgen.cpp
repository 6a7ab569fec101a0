#include "dppo/taskgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "dppo/io.hpp"
#include "dppo/rng.hpp"

namespace dppo {

namespace {

constexpr std::array<const char*, kSkillCount> kSkillNames = {
    "AffordanceReasoning", "CountingDistance", "CausalTemporal",
    "TaskSuccessEval",     "TaskPlanning",     "TaskPrediction",
};

// Stream tags for independent generator components.
constexpr std::uint64_t kTagMappings = 0x4d415053;  // per-skill gold mappings
constexpr std::uint64_t kTagSample = 0x53414d50;    // per-sample stream

}  // namespace

const char* skill_name(SkillDimension skill) {
    return kSkillNames[static_cast<int>(skill)];
}

SkillDimension skill_from_name(const std::string& name) {
    for (int i = 0; i < kSkillCount; ++i) {
        if (name == kSkillNames[i]) return static_cast<SkillDimension>(i);
    }
    throw ContractError("unknown skill name: " + name);
}

void SuiteConfig::validate() const {
    if (feature_dim < FeatureLayout::min_feature_dim) {
        throw ConfigError("suite.feature_dim: must be >= " +
                          std::to_string(FeatureLayout::min_feature_dim) +
                          " (skill-context blocks, difficulty, and at least one noise "
                          "coordinate), got " +
                          std::to_string(feature_dim));
    }
    if (answer_count < 2) {
        throw ConfigError("suite.answer_count: must be >= 2, got " +
                          std::to_string(answer_count));
    }
    if (samples_per_skill <= 0) {
        throw ConfigError("suite.samples_per_skill: must be positive, got " +
                          std::to_string(samples_per_skill));
    }
    if (!(general_fraction >= 0.0 && general_fraction < 1.0)) {
        throw ConfigError("suite.general_fraction: must be in [0, 1)");
    }
    if (!(easy_label_noise >= 0.0 && easy_label_noise < 1.0)) {
        throw ConfigError("suite.easy_label_noise: must be in [0, 1)");
    }
    if (!(hard_label_noise >= 0.0 && hard_label_noise < 1.0)) {
        throw ConfigError("suite.hard_label_noise: must be in [0, 1)");
    }
    if (!(difficulty_min >= 0.0 && difficulty_min < difficulty_max && difficulty_max <= 1.0)) {
        throw ConfigError("suite.difficulty_min/difficulty_max: need 0 <= min < max <= 1");
    }
    if (easy_skill < -1 || easy_skill >= kSkillCount) {
        throw ConfigError("suite.easy_skill: must be -1 or a skill index in [0, 6)");
    }
    if (easy_skill >= 0 &&
        !(easy_difficulty_max > difficulty_min && easy_difficulty_max <= difficulty_max)) {
        throw ConfigError("suite.easy_difficulty_max: must lie in (difficulty_min, difficulty_max]");
    }
    if (!(general_difficulty_max > difficulty_min && general_difficulty_max <= difficulty_max)) {
        throw ConfigError("suite.general_difficulty_max: must lie in (difficulty_min, difficulty_max]");
    }
    if (!(band_threshold > difficulty_min && band_threshold < difficulty_max)) {
        throw ConfigError("suite.band_threshold: must lie inside (difficulty_min, difficulty_max)");
    }
    if (!(signal_slope >= 0.0 && signal_slope < 1.0)) {
        throw ConfigError("suite.signal_slope: must be in [0, 1)");
    }
    if (!(general_coupling >= 0.0 && general_coupling <= 1.0)) {
        throw ConfigError("suite.general_coupling: must be in [0, 1]");
    }
    if (!(noise_sigma > 0.0)) {
        throw ConfigError("suite.noise_sigma: must be positive");
    }
    if (!(value_range > 0.0)) {
        throw ConfigError("suite.value_range: must be positive");
    }
}

void SampleSet::add(SampleInstance sample) {
    if (index_.count(sample.id) != 0) {
        throw ContractError("duplicate sample id " + std::to_string(sample.id));
    }
    index_.emplace(sample.id, samples_.size());
    samples_.push_back(std::move(sample));
}

const SampleInstance& SampleSet::by_id(SampleId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
        throw ContractError("unknown sample id " + std::to_string(id));
    }
    return samples_[it->second];
}

std::vector<SampleId> SampleSet::ids() const {
    std::vector<SampleId> out;
    out.reserve(samples_.size());
    for (const auto& [id, idx] : index_) out.push_back(id);
    return out;
}

std::vector<SampleId> SampleSet::embodied_ids() const {
    std::vector<SampleId> out;
    for (const auto& [id, idx] : index_) {
        if (!samples_[idx].is_general) out.push_back(id);
    }
    return out;
}

std::vector<SampleId> SampleSet::general_ids() const {
    std::vector<SampleId> out;
    for (const auto& [id, idx] : index_) {
        if (samples_[idx].is_general) out.push_back(id);
    }
    return out;
}

std::vector<double> numeric_bin_centers(int answer_count, double value_range) {
    std::vector<double> centers(answer_count);
    const double width = value_range / answer_count;
    for (int b = 0; b < answer_count; ++b) centers[b] = (b + 0.5) * width;
    return centers;
}

namespace {

// Per-skill answer mappings: the easy-band gold, the hard-band gold (always
// different), and the general-pool gold (always different from the easy-band
// gold so embodied training genuinely conflicts with general competence).
struct SkillMappings {
    std::array<int, kSkillCount> easy_gold{};
    std::array<int, kSkillCount> hard_gold{};
    std::array<int, kSkillCount> general_gold{};
};

SkillMappings draw_mappings(std::uint64_t seed, int answer_count) {
    Rng rng(derive_seed(seed, kTagMappings));
    SkillMappings m;
    for (int k = 0; k < kSkillCount; ++k) {
        m.easy_gold[k] = rng.index(answer_count);
        m.hard_gold[k] = (m.easy_gold[k] + 1 + rng.index(answer_count - 1)) % answer_count;
        m.general_gold[k] = (m.easy_gold[k] + 1 + rng.index(answer_count - 1)) % answer_count;
    }
    return m;
}

std::vector<double> build_features(const SuiteConfig& cfg, SkillDimension skill,
                                   double difficulty, bool is_general, Rng& rng) {
    std::vector<double> f(cfg.feature_dim, 0.0);
    const int k = static_cast<int>(skill);
    const double signal = 1.0 - cfg.signal_slope * difficulty;
    if (is_general) {
        f[FeatureLayout::primary_offset + k] = cfg.general_coupling * signal;
        f[FeatureLayout::general_offset + k] = signal;
    } else {
        f[FeatureLayout::primary_offset + k] = signal;
        f[FeatureLayout::interaction_offset + k] = difficulty;
    }
    f[FeatureLayout::difficulty_index] = difficulty;
    for (int j = FeatureLayout::noise_offset; j < cfg.feature_dim; ++j) {
        f[j] = rng.normal(0.0, cfg.noise_sigma);
    }
    return f;
}

}  // namespace

SampleSet generate_suite(const SuiteConfig& config) {
    config.validate();
    const int K = config.answer_count;
    const SkillMappings maps = draw_mappings(config.seed, K);

    // Exactly floor(general_fraction * total) general samples, spread over
    // skills with the remainder going to the lowest skill indices.
    const int total = config.total_samples();
    const int general_total = static_cast<int>(std::floor(config.general_fraction * total));
    std::array<int, kSkillCount> general_quota{};
    for (int k = 0; k < kSkillCount; ++k) general_quota[k] = general_total / kSkillCount;
    for (int k = 0; k < general_total % kSkillCount; ++k) general_quota[k] += 1;

    const std::vector<double> centers = numeric_bin_centers(K, config.value_range);
    const double bin_width = config.value_range / K;

    std::vector<std::string> choice_answers(K);
    for (int a = 0; a < K; ++a) choice_answers[a] = "choice_" + std::to_string(a);
    std::vector<std::string> numeric_answers(K);
    for (int a = 0; a < K; ++a) numeric_answers[a] = format_double(centers[a]);

    // Noisy hard-band samples become feature twins of clean hard-band samples
    // of the same skill: the annotation conflict then lives on identical
    // inputs, where imitation must split probability by label frequency while
    // reward-verified training can still resolve to the majority behaviour.
    std::vector<SampleInstance> built;
    built.reserve(static_cast<std::size_t>(total));
    std::array<std::vector<std::size_t>, kSkillCount> clean_hard;
    std::array<std::vector<std::size_t>, kSkillCount> noisy_hard;
    SampleId next_id = 0;
    for (int k = 0; k < kSkillCount; ++k) {
        const auto skill = static_cast<SkillDimension>(k);
        const int n_general = std::min(general_quota[k], config.samples_per_skill);
        const int n_embodied = config.samples_per_skill - n_general;
        for (int i = 0; i < config.samples_per_skill; ++i) {
            const bool is_general = i >= n_embodied;
            SampleInstance s;
            s.id = next_id++;
            s.skill = skill;
            s.is_general = is_general;

            Rng rng(derive_seed(config.seed, kTagSample, static_cast<std::uint64_t>(s.id)));
            double d_max = config.difficulty_max;
            if (is_general) {
                d_max = config.general_difficulty_max;
            } else if (k == config.easy_skill) {
                d_max = config.easy_difficulty_max;
            }
            s.difficulty = rng.uniform(config.difficulty_min, d_max);

            // Both noise draws happen unconditionally to keep the per-sample
            // stream layout fixed across bands.
            const bool hard_noisy = rng.bernoulli(config.hard_label_noise);
            const bool easy_noisy = rng.bernoulli(config.easy_label_noise);
            const int noisy_gold = rng.index(K);
            bool is_noisy = false;
            if (is_general) {
                s.gold = maps.general_gold[k];
            } else if (s.difficulty > config.band_threshold) {
                is_noisy = hard_noisy;
                s.gold = hard_noisy ? noisy_gold : maps.hard_gold[k];
            } else {
                is_noisy = easy_noisy;
                s.gold = easy_noisy ? noisy_gold : maps.easy_gold[k];
            }

            s.features = build_features(config, skill, s.difficulty, is_general, rng);

            if (skill_is_numeric(skill)) {
                s.answers = numeric_answers;
                s.answer_values = centers;
                s.target = centers[s.gold] + rng.uniform(-0.25, 0.25) * bin_width;
                s.tolerance = 2.0 * bin_width;
            } else {
                s.answers = choice_answers;
            }
            if (!is_general && s.difficulty > config.band_threshold) {
                (is_noisy ? noisy_hard : clean_hard)[k].push_back(built.size());
            }
            built.push_back(std::move(s));
        }
    }
    for (int k = 0; k < kSkillCount; ++k) {
        if (clean_hard[k].empty()) continue;  // degenerate suite: keep own features
        for (std::size_t j = 0; j < noisy_hard[k].size(); ++j) {
            const SampleInstance& twin = built[clean_hard[k][j % clean_hard[k].size()]];
            SampleInstance& noisy = built[noisy_hard[k][j]];
            noisy.features = twin.features;
            noisy.difficulty = twin.difficulty;
        }
    }
    SampleSet set(config.feature_dim, K, config.value_range);
    for (SampleInstance& s : built) set.add(std::move(s));
    return set;
}

TeacherResponse teacher_solve(const SampleInstance& sample) {
    TeacherResponse t;
    t.sample_id = sample.id;
    t.response.format_ok = true;
    if (skill_is_numeric(sample.skill)) {
        t.response.answer = sample.target;
    } else {
        t.response.answer = sample.gold;
    }
    return t;
}

SampleSet related_samples(const SampleSet& pool, const std::set<SkillDimension>& weak_skills) {
    SampleSet out(pool.feature_dim(), pool.answer_count(), pool.value_range());
    if (weak_skills.empty()) return out;
    for (const SampleId id : pool.ids()) {
        const SampleInstance& s = pool.by_id(id);
        if (!s.is_general && weak_skills.count(s.skill) != 0) out.add(s);
    }
    return out;
}

}  // namespace dppo
