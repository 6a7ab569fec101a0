#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "dppo/curation.hpp"
#include "dppo/metaloop.hpp"
#include "dppo/policy.hpp"
#include "dppo/taskgen.hpp"

namespace dppo {

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Shortest round-trip decimal rendering (std::to_chars); parsing restores
// the exact bit pattern.
std::string format_double(double value);
double parse_double(const std::string& text);
std::int64_t parse_int(const std::string& text);

std::vector<std::string> split_fields(const std::string& line, char sep);

// --- suite files -----------------------------------------------------------
// Header line, then one sample per line with fields in fixed order:
// id, skill, difficulty, is_general, gold (numeric: gold:target:tolerance),
// features (comma-joined), answers (comma-joined). Round-trips bit-exactly.
void write_suite(const std::string& path, const SampleSet& suite);
SampleSet read_suite(const std::string& path);

// --- policy checkpoints ------------------------------------------------------
// Header (feature dim, answer count, step count) plus the full matrix;
// bit-exact round-trip.
void write_checkpoint(const std::string& path, const PolicyParams& params);
PolicyParams read_checkpoint(const std::string& path);

// --- rollout log -------------------------------------------------------------
// Append-only, one line per record: sample_id, loop, response (format flag,
// kind, answer), format/task/composite rewards, success, rng seed, counter.
std::string rollout_record_line(const RolloutRecord& record);
RolloutRecord parse_rollout_record(const std::string& line);

class RolloutLogWriter {
public:
    explicit RolloutLogWriter(const std::string& path);
    void write(const RolloutRecord& record);
    void flush();
    std::uint64_t lines_written() const { return lines_; }

private:
    std::ofstream out_;
    std::uint64_t lines_ = 0;
};

std::vector<RolloutRecord> read_rollout_log(const std::string& path);

// --- tabular exports ----------------------------------------------------------
void write_stats_csv(const std::string& path, const std::map<SampleId, SampleStats>& stats);

void write_history_csv(const std::string& path, const LoopHistory& history);
LoopHistory read_history_csv(const std::string& path);

// Flat key/value run summary (success metrics, budgets, abort flag).
void write_summary(const std::string& path, const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> read_summary(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace dppo
