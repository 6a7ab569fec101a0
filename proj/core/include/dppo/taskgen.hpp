#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "dppo/types.hpp"

namespace dppo {

// Fixed feature layout. Samples carry a skill-signal block whose position
// depends on the pool (embodied vs. general), a difficulty-interaction block
// (embodied only) that lets a linear policy express difficulty-dependent
// answer rules, the raw difficulty coordinate, and trailing noise
// coordinates drawn once at generation.
struct FeatureLayout {
    static constexpr int primary_offset = 0;
    static constexpr int general_offset = kSkillCount;
    static constexpr int interaction_offset = 2 * kSkillCount;
    static constexpr int difficulty_index = 3 * kSkillCount;
    static constexpr int noise_offset = 3 * kSkillCount + 1;
    static constexpr int min_feature_dim = noise_offset + 1;
};

struct SuiteConfig {
    std::uint64_t seed = 7;
    int feature_dim = 22;
    int answer_count = 4;
    int samples_per_skill = 200;
    double general_fraction = 0.25;
    // Fractions of embodied samples whose gold is drawn per-sample at random,
    // by difficulty band. Hard instances carry unreliable labels more often,
    // so blind imitation of their annotations is costly while reward-verified
    // refinement of the clean ones is not.
    double easy_label_noise = 0.0;
    double hard_label_noise = 0.4;
    double difficulty_min = 0.05;
    double difficulty_max = 0.95;
    // One deliberately easy skill generated with a reduced difficulty range;
    // -1 disables the override.
    int easy_skill = static_cast<int>(SkillDimension::TaskSuccessEval);
    double easy_difficulty_max = 0.35;
    double general_difficulty_max = 0.5;
    // Embodied golds switch to the skill's second mapping above this
    // difficulty; expressible through the difficulty-interaction block.
    double band_threshold = 0.57;
    // Skill-signal magnitude s(d) = 1 - signal_slope * d: higher difficulty
    // lowers the signal-to-noise ratio of the gold-discriminating feature.
    double signal_slope = 0.9;
    // How strongly general samples load on the embodied skill block; this is
    // the interference channel that makes embodied-only training degrade
    // general-pool competence.
    double general_coupling = 0.6;
    double noise_sigma = 0.1;
    // Numeric answers are K bin centers spanning [0, value_range].
    double value_range = 10.0;

    int noise_dims() const { return feature_dim - FeatureLayout::noise_offset; }
    int total_samples() const { return kSkillCount * samples_per_skill; }
    void validate() const;  // throws ConfigError naming the offending key
};

class SampleSet {
public:
    SampleSet() = default;
    SampleSet(int feature_dim, int answer_count, double value_range)
        : feature_dim_(feature_dim), answer_count_(answer_count), value_range_(value_range) {}

    void add(SampleInstance sample);

    int feature_dim() const { return feature_dim_; }
    int answer_count() const { return answer_count_; }
    double value_range() const { return value_range_; }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    const std::vector<SampleInstance>& samples() const { return samples_; }

    bool contains(SampleId id) const { return index_.count(id) != 0; }
    const SampleInstance& by_id(SampleId id) const;

    std::vector<SampleId> ids() const;
    std::vector<SampleId> embodied_ids() const;
    std::vector<SampleId> general_ids() const;

private:
    int feature_dim_ = 0;
    int answer_count_ = 0;
    double value_range_ = 0.0;
    std::vector<SampleInstance> samples_;
    std::map<SampleId, std::size_t> index_;
};

// Per-sample answer values for numeric skills: K bin centers over
// [0, value_range].
std::vector<double> numeric_bin_centers(int answer_count, double value_range);

// Deterministic: identical (config, config.seed) produce identical suites.
SampleSet generate_suite(const SuiteConfig& config);

// Ground-truth response: structured format plus the gold answer (the exact
// target value for numeric skills). Always earns the maximal composite
// reward.
TeacherResponse teacher_solve(const SampleInstance& sample);

// All non-general samples of `pool` whose skill is in `weak_skills`,
// in ascending id order. Empty skill set yields an empty result.
SampleSet related_samples(const SampleSet& pool, const std::set<SkillDimension>& weak_skills);

}  // namespace dppo
