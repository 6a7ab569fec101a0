#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace dppo {

using SampleId = std::int64_t;

// Thrown when a config value is invalid. The message names the offending key.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a caller violates an operation precondition.
class ContractError : public std::runtime_error {
public:
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// The six ability dimensions every sample is tagged with. CountingDistance
// is numeric-valued; the other five are K-way choice tasks.
enum class SkillDimension : int {
    AffordanceReasoning = 0,
    CountingDistance = 1,
    CausalTemporal = 2,
    TaskSuccessEval = 3,
    TaskPlanning = 4,
    TaskPrediction = 5,
};

inline constexpr int kSkillCount = 6;

const char* skill_name(SkillDimension skill);
SkillDimension skill_from_name(const std::string& name);

inline bool skill_is_numeric(SkillDimension skill) {
    return skill == SkillDimension::CountingDistance;
}

// A policy (or teacher) response: a structured-format flag plus exactly one
// answer payload — a candidate index for choice tasks, a real value for
// numeric tasks.
struct StructuredResponse {
    bool format_ok = false;
    std::variant<int, double> answer;

    bool is_choice() const { return std::holds_alternative<int>(answer); }
    bool is_numeric() const { return std::holds_alternative<double>(answer); }
    int choice() const { return std::get<int>(answer); }
    double value() const { return std::get<double>(answer); }
};

// One generated task instance. `features` always has the suite's feature
// dimension F; `answers` holds the K candidate strings (bin-center values,
// rendered exactly, for numeric skills). For numeric skills `target` and
// `tolerance` define the graded reward; `gold` is the index of the matching
// bin (choice skills use `gold` directly and leave target/tolerance at 0).
struct SampleInstance {
    SampleId id = 0;
    SkillDimension skill = SkillDimension::AffordanceReasoning;
    std::vector<double> features;
    std::vector<std::string> answers;
    std::vector<double> answer_values;  // parsed bin centers; numeric skills only
    int gold = 0;
    double target = 0.0;
    double tolerance = 0.0;
    double difficulty = 0.0;
    bool is_general = false;
};

struct TeacherResponse {
    SampleId sample_id = 0;
    StructuredResponse response;
};

}  // namespace dppo
