#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "dppo/rewards.hpp"
#include "dppo/taskgen.hpp"

using namespace dppo;

namespace {

SuiteConfig small_config() {
    SuiteConfig cfg;
    cfg.samples_per_skill = 40;
    return cfg;
}

// The built suite never exposes the per-band answer mappings directly; the
// tests recover them as the modal gold of each (skill, band) population.
int modal_gold(const SampleSet& suite, SkillDimension skill, bool general, bool hard_band,
               double threshold) {
    std::map<int, int> counts;
    for (const auto& s : suite.samples()) {
        if (s.skill != skill || s.is_general != general) continue;
        if (!general && (s.difficulty > threshold) != hard_band) continue;
        counts[s.gold] += 1;
    }
    REQUIRE(!counts.empty());
    int best = -1, best_count = -1;
    for (const auto& [gold, count] : counts) {
        if (count > best_count) {
            best = gold;
            best_count = count;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("suite composition matches the configuration") {
    const SuiteConfig cfg = small_config();
    const SampleSet suite = generate_suite(cfg);
    CHECK(suite.size() == static_cast<std::size_t>(cfg.total_samples()));
    CHECK(suite.feature_dim() == cfg.feature_dim);
    CHECK(suite.answer_count() == cfg.answer_count);

    std::map<SkillDimension, int> per_skill;
    int general = 0;
    std::set<SampleId> ids;
    for (const auto& s : suite.samples()) {
        per_skill[s.skill] += 1;
        general += s.is_general;
        ids.insert(s.id);
        CHECK(s.features.size() == static_cast<std::size_t>(cfg.feature_dim));
        CHECK(s.gold >= 0);
        CHECK(s.gold < cfg.answer_count);
        CHECK(s.difficulty >= cfg.difficulty_min);
        CHECK(s.difficulty <= cfg.difficulty_max);
    }
    CHECK(ids.size() == suite.size());  // unique ids
    for (const auto& [skill, count] : per_skill) CHECK(count == cfg.samples_per_skill);
    CHECK(general ==
          static_cast<int>(std::floor(cfg.general_fraction * cfg.total_samples())));
}

TEST_CASE("feature layout separates the pools") {
    const SuiteConfig cfg = small_config();
    const SampleSet suite = generate_suite(cfg);
    for (const auto& s : suite.samples()) {
        const int k = static_cast<int>(s.skill);
        CHECK(s.features[FeatureLayout::difficulty_index] == s.difficulty);
        if (s.is_general) {
            // General samples load their own block plus the coupled primary
            // coordinate; the interaction block stays empty.
            CHECK(s.features[FeatureLayout::general_offset + k] != 0.0);
            for (int j = 0; j < kSkillCount; ++j)
                CHECK(s.features[FeatureLayout::interaction_offset + j] == 0.0);
            CHECK(s.features[FeatureLayout::primary_offset + k] ==
                  doctest::Approx(cfg.general_coupling *
                                  s.features[FeatureLayout::general_offset + k]));
        } else {
            for (int j = 0; j < kSkillCount; ++j)
                CHECK(s.features[FeatureLayout::general_offset + j] == 0.0);
            CHECK(s.features[FeatureLayout::interaction_offset + k] == s.difficulty);
        }
    }
}

TEST_CASE("difficulty bands use distinct golds and general conflicts with easy") {
    const SuiteConfig cfg = small_config();
    const SampleSet suite = generate_suite(cfg);
    for (int k = 0; k < kSkillCount; ++k) {
        const auto skill = static_cast<SkillDimension>(k);
        const int easy = modal_gold(suite, skill, false, false, cfg.band_threshold);
        const int general = modal_gold(suite, skill, true, false, cfg.band_threshold);
        CHECK(easy != general);
        if (k == cfg.easy_skill) continue;  // no hard band on the easy skill
        const int hard = modal_gold(suite, skill, false, true, cfg.band_threshold);
        CHECK(easy != hard);
    }
}

TEST_CASE("the easy skill stays below its difficulty cap") {
    const SuiteConfig cfg = small_config();
    const SampleSet suite = generate_suite(cfg);
    for (const auto& s : suite.samples()) {
        if (static_cast<int>(s.skill) != cfg.easy_skill || s.is_general) continue;
        CHECK(s.difficulty <= cfg.easy_difficulty_max);
    }
}

TEST_CASE("noisy hard samples are feature twins of clean ones") {
    SuiteConfig cfg = small_config();
    cfg.samples_per_skill = 120;
    cfg.hard_label_noise = 0.4;
    const SampleSet suite = generate_suite(cfg);
    int twins = 0;
    for (int k = 0; k < kSkillCount; ++k) {
        const auto skill = static_cast<SkillDimension>(k);
        if (k == cfg.easy_skill) continue;
        const int hard = modal_gold(suite, skill, false, true, cfg.band_threshold);
        for (const auto& s : suite.samples()) {
            if (s.skill != skill || s.is_general || s.difficulty <= cfg.band_threshold) continue;
            if (s.gold == hard) continue;  // clean (or coincidentally aligned noise)
            // Every off-gold hard sample shares its exact feature vector and
            // difficulty with some clean hard sample of the skill.
            bool matched = false;
            for (const auto& t : suite.samples()) {
                if (t.skill != skill || t.is_general || t.gold != hard) continue;
                if (t.difficulty == s.difficulty && t.features == s.features) {
                    matched = true;
                    break;
                }
            }
            CHECK(matched);
            twins += 1;
        }
    }
    CHECK(twins > 0);
}

TEST_CASE("label noise rates are honored per band") {
    SuiteConfig cfg = small_config();
    cfg.samples_per_skill = 200;
    cfg.easy_label_noise = 0.0;
    cfg.hard_label_noise = 0.4;
    const SampleSet suite = generate_suite(cfg);
    int hard_total = 0, hard_off_gold = 0;
    for (int k = 0; k < kSkillCount; ++k) {
        const auto skill = static_cast<SkillDimension>(k);
        const int easy = modal_gold(suite, skill, false, false, cfg.band_threshold);
        if (k != cfg.easy_skill) {
            const int hard = modal_gold(suite, skill, false, true, cfg.band_threshold);
            for (const auto& s : suite.samples()) {
                if (s.skill != skill || s.is_general) continue;
                if (s.difficulty > cfg.band_threshold) {
                    hard_total += 1;
                    hard_off_gold += s.gold != hard;
                }
            }
        }
        for (const auto& s : suite.samples()) {
            if (s.skill != skill || s.is_general || s.difficulty > cfg.band_threshold) continue;
            CHECK(s.gold == easy);  // zero easy-band noise
        }
    }
    // Noisy draws re-hit the band gold 1/K of the time, so the observable
    // off-gold fraction concentrates near noise * (K-1)/K = 0.3.
    const double off = static_cast<double>(hard_off_gold) / hard_total;
    CHECK(off > 0.2);
    CHECK(off < 0.4);
}

TEST_CASE("numeric samples carry consistent bins, targets, and tolerances") {
    const SuiteConfig cfg = small_config();
    const SampleSet suite = generate_suite(cfg);
    const auto centers = numeric_bin_centers(cfg.answer_count, cfg.value_range);
    REQUIRE(centers.size() == static_cast<std::size_t>(cfg.answer_count));
    const double width = cfg.value_range / cfg.answer_count;
    for (int a = 0; a < cfg.answer_count; ++a)
        CHECK(centers[static_cast<std::size_t>(a)] == doctest::Approx((a + 0.5) * width));
    for (const auto& s : suite.samples()) {
        if (!skill_is_numeric(s.skill)) {
            CHECK(s.answer_values.empty());
            CHECK(s.tolerance == 0.0);
            continue;
        }
        CHECK(s.answer_values == centers);
        CHECK(s.tolerance > 0.0);
        CHECK(std::abs(s.target - centers[static_cast<std::size_t>(s.gold)]) <= 0.25 * width);
        // The gold bin is the nearest bin to the target.
        for (int a = 0; a < cfg.answer_count; ++a)
            CHECK(std::abs(s.target - centers[static_cast<std::size_t>(a)]) >=
                  std::abs(s.target - centers[static_cast<std::size_t>(s.gold)]));
    }
}

TEST_CASE("generation is deterministic in the seed") {
    const SuiteConfig cfg = small_config();
    const SampleSet a = generate_suite(cfg);
    const SampleSet b = generate_suite(cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.samples()[i].features == b.samples()[i].features);
        CHECK(a.samples()[i].gold == b.samples()[i].gold);
        CHECK(a.samples()[i].target == b.samples()[i].target);
    }
    SuiteConfig other = cfg;
    other.seed += 1;
    const SampleSet c = generate_suite(other);
    bool any_difference = false;
    for (std::size_t i = 0; i < a.size(); ++i)
        any_difference |= a.samples()[i].features != c.samples()[i].features;
    CHECK(any_difference);
}

TEST_CASE("teacher answers earn the maximal composite reward") {
    const SuiteConfig cfg = small_config();
    const SampleSet suite = generate_suite(cfg);
    const RewardSpec spec;
    for (const auto& s : suite.samples()) {
        const TeacherResponse t = teacher_solve(s);
        CHECK(t.sample_id == s.id);
        CHECK(composite_reward(spec, s, t.response) ==
              doctest::Approx(spec.lambda_format + spec.lambda_task));
        CHECK(is_success(spec, s, t.response));
    }
}

TEST_CASE("related_samples filters by skill over embodied samples") {
    const SuiteConfig cfg = small_config();
    const SampleSet suite = generate_suite(cfg);
    const std::set<SkillDimension> skills = {SkillDimension::TaskPlanning};
    const SampleSet related = related_samples(suite, skills);
    CHECK(!related.empty());
    SampleId prev = -1;
    for (const auto& s : related.samples()) {
        CHECK(s.skill == SkillDimension::TaskPlanning);
        CHECK(!s.is_general);
        CHECK(s.id > prev);
        prev = s.id;
    }
    CHECK(related_samples(suite, {}).empty());
}

TEST_CASE("invalid suite configurations name the offending key") {
    SuiteConfig cfg;
    cfg.feature_dim = FeatureLayout::min_feature_dim - 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SuiteConfig{};
    cfg.hard_label_noise = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SuiteConfig{};
    cfg.easy_label_noise = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SuiteConfig{};
    cfg.noise_sigma = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SuiteConfig{};
    cfg.answer_count = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
