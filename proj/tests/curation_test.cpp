#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "dppo/curation.hpp"
#include "dppo/rng.hpp"
#include "dppo/taskgen.hpp"
#include "oracles.hpp"

using namespace dppo;

namespace {

// A bare universe: `n` choice samples cycling through the skills.
SampleSet bare_universe(int n) {
    SampleSet set(FeatureLayout::min_feature_dim, 4, 10.0);
    for (int i = 0; i < n; ++i) {
        SampleInstance s;
        s.id = i;
        s.skill = static_cast<SkillDimension>(i % kSkillCount);
        s.features.assign(FeatureLayout::min_feature_dim, 0.0);
        s.answers = {"a", "b", "c", "d"};
        set.add(std::move(s));
    }
    return set;
}

RolloutRecord record_for(SampleId id, bool success) {
    RolloutRecord r;
    r.sample_id = id;
    StructuredResponse resp;
    resp.format_ok = true;
    resp.answer = 0;
    r.response = resp;
    r.success = success;
    return r;
}

// Logs `successes` hits followed by misses up to `total` rollouts.
void log_rate(DifficultyBuffer& buffer, SampleId id, int successes, int total) {
    for (int i = 0; i < total; ++i) buffer.log_rollout(record_for(id, i < successes));
}

}  // namespace

TEST_CASE("success_rate is the plain ratio with contract checks") {
    CHECK(success_rate(3, 8) == 0.375);
    CHECK(success_rate(0, 8) == 0.0);
    CHECK(success_rate(8, 8) == 1.0);
    CHECK_THROWS_AS(success_rate(1, 0), ContractError);
    CHECK_THROWS_AS(success_rate(-1, 8), ContractError);
    CHECK_THROWS_AS(success_rate(9, 8), ContractError);
}

TEST_CASE("success_delta clamps, defaults, and validates epsilon") {
    CHECK(success_delta(0.5, std::nullopt, 0.1) == 1.0);
    CHECK(success_delta(0.5, 0.5, 0.1) == 0.0);
    CHECK(success_delta(0.55, 0.5, 0.1) == doctest::Approx(0.5));
    CHECK(success_delta(0.9, 0.1, 0.1) == 1.0);  // clamped
    CHECK_THROWS_AS(success_delta(0.5, 0.4, 0.05), ConfigError);
    CHECK_THROWS_AS(success_delta(0.5, 0.4, 0.2), ConfigError);
    CHECK_THROWS_AS(success_delta(0.5, 0.4, 0.5), ConfigError);
}

TEST_CASE("stagnation formula matches the oracle on random triples") {
    Rng rng(79);
    for (int i = 0; i < 1000; ++i) {
        const double rate = rng.uniform();
        const double eps = rng.uniform(0.051, 0.199);
        std::optional<double> prev;
        if (rng.bernoulli(0.8)) prev = rng.uniform();
        const double delta = success_delta(rate, prev, eps);
        CHECK(std::abs(delta - oracle::success_delta(rate, prev, eps)) <= 1e-12);
        CHECK(std::abs(stagnation_score(rate, delta) -
                       oracle::stagnation_score(rate, delta)) <= 1e-12);
    }
}

TEST_CASE("stagnation boundaries are exactly one") {
    Rng rng(83);
    for (int i = 0; i < 100; ++i) {
        const double delta = rng.uniform();
        CHECK(stagnation_score(0.0, delta) == 1.0);
        CHECK(stagnation_score(1.0, delta) == 1.0);
        CHECK(stagnation_score(rng.uniform(), 0.0) == 1.0);
    }
    // Interior: maximal learning signal at rate 1/2 with full delta.
    CHECK(stagnation_score(0.5, 1.0) == 0.0);
}

TEST_CASE("task_stagnation averages and rejects empty input") {
    CHECK(task_stagnation({0.2, 0.4, 0.9}) == doctest::Approx(0.5));
    CHECK(task_stagnation({1.0}) == 1.0);
    CHECK_THROWS_AS(task_stagnation({}), ContractError);
}

TEST_CASE("should_stop is an at-or-above comparison") {
    CHECK(should_stop(0.7, 0.7));
    CHECK(should_stop(0.71, 0.7));
    CHECK(!should_stop(0.69, 0.7));
}

TEST_CASE("stagnation config validation brackets epsilon and threshold") {
    StagnationConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.epsilon = 0.05;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = StagnationConfig{};
    cfg.threshold = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = StagnationConfig{};
    cfg.threshold = 1.0;
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("buffer tracks per-sample statistics through the round") {
    const SampleSet universe = bare_universe(12);
    DifficultyBuffer buffer(universe, StagnationConfig{});
    buffer.begin_round();
    log_rate(buffer, 0, 4, 8);
    const SampleStats& st = buffer.stats().at(0);
    CHECK(st.rollout_count == 8);
    CHECK(st.success_count == 4);
    CHECK(st.success_rate == 0.5);
    CHECK(!st.prev_success_rate.has_value());
    CHECK(st.delta == 1.0);  // first measurement
    CHECK(st.stagnation == stagnation_score(0.5, 1.0));
    CHECK(buffer.latest_rates().at(0) == 0.5);
    CHECK_THROWS_AS(buffer.log_rollout(record_for(999, true)), ContractError);
}

TEST_CASE("round transitions carry the previous rate into delta") {
    const SampleSet universe = bare_universe(6);
    DifficultyBuffer buffer(universe, StagnationConfig{});
    buffer.begin_round();
    log_rate(buffer, 1, 4, 8);  // rate 0.5
    buffer.begin_round();
    log_rate(buffer, 1, 4, 8);  // same rate again
    const SampleStats& st = buffer.stats().at(1);
    REQUIRE(st.prev_success_rate.has_value());
    CHECK(*st.prev_success_rate == 0.5);
    CHECK(st.delta == 0.0);
    CHECK(st.stagnation == 1.0);  // no movement means full stagnation

    buffer.begin_round();
    log_rate(buffer, 1, 6, 8);  // rate 0.75, delta clamps at 1
    const SampleStats& moved = buffer.stats().at(1);
    CHECK(*moved.prev_success_rate == 0.5);
    CHECK(moved.delta == 1.0);
}

TEST_CASE("loop reset preserves the carried baseline but clears the round") {
    const SampleSet universe = bare_universe(6);
    DifficultyBuffer buffer(universe, StagnationConfig{});
    buffer.begin_round();
    log_rate(buffer, 2, 8, 8);
    const std::uint64_t counter_before = buffer.loop_records().back().counter;
    buffer.reset();
    CHECK(buffer.stats().empty());
    CHECK(buffer.latest_rates().empty());
    CHECK(buffer.loop_records().empty());
    buffer.begin_round();
    log_rate(buffer, 2, 8, 8);
    const SampleStats& st = buffer.stats().at(2);
    REQUIRE(st.prev_success_rate.has_value());
    CHECK(*st.prev_success_rate == 1.0);  // carried across the reset
    CHECK(buffer.loop_records().front().counter == counter_before + 1);  // monotonic
}

TEST_CASE("rebalance invariants hold over random buffers") {
    const SampleSet universe = bare_universe(48);
    Rng rng(89);
    for (int trial = 0; trial < 1000; ++trial) {
        DifficultyBuffer buffer(universe, StagnationConfig{});
        buffer.begin_round();
        std::map<SampleId, double> rates;
        const int measured = 1 + rng.index(48);
        for (int i = 0; i < measured; ++i) {
            const int successes = rng.index(5);
            log_rate(buffer, i, successes, 4);
            rates[i] = successes / 4.0;
        }
        const auto picked = buffer.rebalance();
        const auto again = buffer.rebalance();
        CHECK(picked == again);  // deterministic
        CHECK(std::is_sorted(picked.begin(), picked.end()));

        std::set<SampleId> picked_set(picked.begin(), picked.end());
        std::size_t partials = 0, zeros_total = 0, zeros_picked = 0;
        for (const auto& [id, rate] : rates) {
            if (rate == 1.0) {
                CHECK(!picked_set.count(id));  // mastered never selected
            } else if (rate == 0.0) {
                zeros_total += 1;
                zeros_picked += picked_set.count(id);
            } else {
                partials += 1;
                CHECK(picked_set.count(id) == 1);  // partials always retained
            }
        }
        CHECK(zeros_picked <= partials);
        CHECK(zeros_picked == std::min(zeros_total, partials));
        CHECK(picked.size() == partials + zeros_picked);
    }
}

TEST_CASE("rebalance drops excess failures in ascending id order") {
    const SampleSet universe = bare_universe(10);
    DifficultyBuffer buffer(universe, StagnationConfig{});
    buffer.begin_round();
    log_rate(buffer, 0, 0, 4);
    log_rate(buffer, 1, 0, 4);
    log_rate(buffer, 2, 0, 4);
    log_rate(buffer, 3, 2, 4);  // one partial
    const auto picked = buffer.rebalance();
    // Partial 3 plus one failure slot: ids 0 and 1 are dropped first.
    CHECK(picked == std::vector<SampleId>{2, 3});
}

TEST_CASE("collect_weak remembers final zero rates from earlier rounds") {
    const SampleSet universe = bare_universe(8);
    DifficultyBuffer buffer(universe, StagnationConfig{});
    buffer.begin_round();
    log_rate(buffer, 0, 0, 4);  // zero, then never measured again
    log_rate(buffer, 1, 2, 4);
    log_rate(buffer, 2, 0, 4);
    buffer.begin_round();
    log_rate(buffer, 1, 0, 4);  // regressed to zero this round
    log_rate(buffer, 2, 4, 4);  // recovered
    CHECK(buffer.collect_weak() == std::vector<SampleId>{0, 1});
    buffer.reset();
    CHECK(buffer.collect_weak().empty());
}

TEST_CASE("task stagnation aggregates in-progress samples only") {
    const SampleSet universe = bare_universe(4 * kSkillCount);
    DifficultyBuffer buffer(universe, StagnationConfig{});
    const auto skill = SkillDimension::AffordanceReasoning;
    buffer.begin_round();
    // Same skill occupies ids 0, 6, 12, 18 in the cycling universe.
    log_rate(buffer, 0, 4, 4);   // mastered: excluded
    log_rate(buffer, 6, 0, 4);   // failed: excluded
    log_rate(buffer, 12, 2, 4);  // in progress
    log_rate(buffer, 18, 3, 4);  // in progress
    const double expected = (stagnation_score(0.5, 1.0) + stagnation_score(0.75, 1.0)) / 2.0;
    CHECK(buffer.task_stagnation_for(skill) == doctest::Approx(expected));
    CHECK(buffer.has_task_measurements(skill));
    CHECK(buffer.task_should_stop(skill) == (expected >= 0.7));
}

TEST_CASE("boundary-only tasks read as fully stagnant") {
    const SampleSet universe = bare_universe(2 * kSkillCount);
    DifficultyBuffer buffer(universe, StagnationConfig{});
    buffer.begin_round();
    log_rate(buffer, 0, 4, 4);  // mastered
    log_rate(buffer, 6, 0, 4);  // failed
    CHECK(buffer.task_stagnation_for(SkillDimension::AffordanceReasoning) == 1.0);
    CHECK(buffer.task_should_stop(SkillDimension::AffordanceReasoning));
    // A skill with no measurements at all is a contract violation.
    CHECK(!buffer.has_task_measurements(SkillDimension::CausalTemporal));
    CHECK_THROWS_AS(buffer.task_stagnation_for(SkillDimension::CausalTemporal), ContractError);
}

TEST_CASE("round records are bounded by begin_round and the sink sees everything") {
    const SampleSet universe = bare_universe(6);
    DifficultyBuffer buffer(universe, StagnationConfig{});
    std::vector<std::uint64_t> sunk;
    buffer.set_sink([&sunk](const RolloutRecord& r) { sunk.push_back(r.counter); });
    buffer.begin_round();
    log_rate(buffer, 0, 1, 3);
    buffer.begin_round();
    log_rate(buffer, 1, 1, 2);
    CHECK(buffer.round_records().size() == 2);
    CHECK(buffer.loop_records().size() == 5);
    CHECK(sunk.size() == 5);
    for (std::size_t i = 0; i < sunk.size(); ++i) CHECK(sunk[i] == i);
}
