#include "dppo/io.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>
#include <system_error>

namespace dppo {
namespace {

constexpr char kSep = '\t';

std::string join_doubles(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += format_double(values[i]);
    }
    return out;
}

std::vector<double> parse_doubles(const std::string& text) {
    std::vector<double> out;
    if (text.empty()) return out;
    for (const std::string& field : split_fields(text, ',')) out.push_back(parse_double(field));
    return out;
}

std::string join_strings(const std::vector<std::string>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += values[i];
    }
    return out;
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw IoError(msg);
}

std::uint64_t parse_u64(const std::string& text) {
    std::uint64_t value = 0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto res = std::from_chars(begin, end, value);
    require(res.ec == std::errc() && res.ptr == end, "parse_u64: bad field '" + text + "'");
    return value;
}

std::vector<std::string> read_lines(const std::string& path, bool drop_unterminated_tail) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();

    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < content.size()) {
        const std::size_t nl = content.find('\n', start);
        if (nl == std::string::npos) {
            // Unterminated tail: a crash mid-write leaves one; callers that
            // promise prefix-parseability skip it.
            if (!drop_unterminated_tail) lines.push_back(content.substr(start));
            break;
        }
        lines.push_back(content.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

const std::string& history_header() {
    static const std::string header = [] {
        std::string h = "loop,phase,heldout_embodied,heldout_general";
        for (const char* prefix : {"train_rate_", "heldout_", "stagnation_"}) {
            for (int k = 0; k < kSkillCount; ++k) {
                h += ',';
                h += prefix;
                h += skill_name(static_cast<SkillDimension>(k));
            }
        }
        h += ",rl_size,weak_size,related_size,replay_size,rl_epochs_run,rollouts_used,"
             "grad_touches_used";
        return h;
    }();
    return header;
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    require(res.ec == std::errc(), "format_double: to_chars failed");
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto res = std::from_chars(begin, end, value);
    require(res.ec == std::errc() && res.ptr == end, "parse_double: bad field '" + text + "'");
    return value;
}

std::int64_t parse_int(const std::string& text) {
    std::int64_t value = 0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto res = std::from_chars(begin, end, value);
    require(res.ec == std::errc() && res.ptr == end, "parse_int: bad field '" + text + "'");
    return value;
}

std::vector<std::string> split_fields(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

// --- suite files -------------------------------------------------------------

void write_suite(const std::string& path, const SampleSet& suite) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open for writing: " + path);
    out << "suite" << kSep << 1 << kSep << suite.feature_dim() << kSep << suite.answer_count()
        << kSep << format_double(suite.value_range()) << '\n';
    for (const SampleInstance& s : suite.samples()) {
        out << s.id << kSep << skill_name(s.skill) << kSep << format_double(s.difficulty) << kSep
            << (s.is_general ? 1 : 0) << kSep;
        if (skill_is_numeric(s.skill)) {
            out << s.gold << ':' << format_double(s.target) << ':' << format_double(s.tolerance);
        } else {
            out << s.gold;
        }
        out << kSep << join_doubles(s.features) << kSep << join_strings(s.answers) << '\n';
    }
    require(out.good(), "write failed: " + path);
}

SampleSet read_suite(const std::string& path) {
    const std::vector<std::string> lines = read_lines(path, false);
    require(!lines.empty(), "suite file is empty: " + path);

    const std::vector<std::string> head = split_fields(lines[0], kSep);
    require(head.size() == 5 && head[0] == "suite" && head[1] == "1",
            "not a suite file: " + path);
    const int feature_dim = static_cast<int>(parse_int(head[2]));
    const int answer_count = static_cast<int>(parse_int(head[3]));
    const double value_range = parse_double(head[4]);

    SampleSet suite(feature_dim, answer_count, value_range);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::vector<std::string> f = split_fields(lines[i], kSep);
        require(f.size() == 7, "suite line " + std::to_string(i + 1) + ": want 7 fields");
        SampleInstance s;
        s.id = parse_int(f[0]);
        s.skill = skill_from_name(f[1]);
        s.difficulty = parse_double(f[2]);
        s.is_general = parse_int(f[3]) != 0;
        const std::vector<std::string> gold = split_fields(f[4], ':');
        if (skill_is_numeric(s.skill)) {
            require(gold.size() == 3, "suite line " + std::to_string(i + 1) + ": bad gold triple");
            s.gold = static_cast<int>(parse_int(gold[0]));
            s.target = parse_double(gold[1]);
            s.tolerance = parse_double(gold[2]);
        } else {
            require(gold.size() == 1, "suite line " + std::to_string(i + 1) + ": bad gold field");
            s.gold = static_cast<int>(parse_int(gold[0]));
        }
        s.features = parse_doubles(f[5]);
        require(static_cast<int>(s.features.size()) == feature_dim,
                "suite line " + std::to_string(i + 1) + ": feature dim mismatch");
        s.answers = split_fields(f[6], ',');
        require(static_cast<int>(s.answers.size()) == answer_count,
                "suite line " + std::to_string(i + 1) + ": answer count mismatch");
        if (skill_is_numeric(s.skill)) {
            s.answer_values.reserve(s.answers.size());
            for (const std::string& a : s.answers) s.answer_values.push_back(parse_double(a));
        }
        suite.add(std::move(s));
    }
    return suite;
}

// --- policy checkpoints --------------------------------------------------------

void write_checkpoint(const std::string& path, const PolicyParams& params) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open for writing: " + path);
    out << "checkpoint" << kSep << 1 << kSep << params.feature_dim() << kSep
        << params.answer_count() << kSep << params.step_count << '\n';
    for (int r = 0; r < params.theta.rows; ++r) {
        for (int c = 0; c < params.theta.cols; ++c) {
            if (c) out << ' ';
            out << format_double(params.theta.at(r, c));
        }
        out << '\n';
    }
    require(out.good(), "write failed: " + path);
}

PolicyParams read_checkpoint(const std::string& path) {
    const std::vector<std::string> lines = read_lines(path, false);
    require(!lines.empty(), "checkpoint file is empty: " + path);
    const std::vector<std::string> head = split_fields(lines[0], kSep);
    require(head.size() == 5 && head[0] == "checkpoint" && head[1] == "1",
            "not a checkpoint file: " + path);
    const int feature_dim = static_cast<int>(parse_int(head[2]));
    const int answer_count = static_cast<int>(parse_int(head[3]));

    PolicyParams params(feature_dim, answer_count);
    params.step_count = parse_int(head[4]);
    require(static_cast<int>(lines.size()) >= 1 + feature_dim,
            "checkpoint truncated: " + path);
    for (int r = 0; r < feature_dim; ++r) {
        const std::vector<std::string> row = split_fields(lines[static_cast<std::size_t>(r) + 1], ' ');
        require(static_cast<int>(row.size()) == params.theta.cols,
                "checkpoint row " + std::to_string(r) + ": width mismatch");
        for (int c = 0; c < params.theta.cols; ++c) {
            params.theta.at(r, c) = parse_double(row[static_cast<std::size_t>(c)]);
        }
    }
    return params;
}

// --- rollout log ----------------------------------------------------------------

std::string rollout_record_line(const RolloutRecord& record) {
    std::string line;
    line += std::to_string(record.sample_id);
    line += kSep;
    line += std::to_string(record.loop_index);
    line += kSep;
    line += record.response.format_ok ? '1' : '0';
    line += kSep;
    if (record.response.is_choice()) {
        line += 'c';
        line += kSep;
        line += std::to_string(record.response.choice());
    } else {
        line += 'n';
        line += kSep;
        line += format_double(record.response.value());
    }
    line += kSep;
    line += format_double(record.format_reward);
    line += kSep;
    line += format_double(record.task_reward);
    line += kSep;
    line += format_double(record.composite);
    line += kSep;
    line += record.success ? '1' : '0';
    line += kSep;
    line += std::to_string(record.rng_seed);
    line += kSep;
    line += std::to_string(record.counter);
    return line;
}

RolloutRecord parse_rollout_record(const std::string& line) {
    const std::vector<std::string> f = split_fields(line, kSep);
    require(f.size() == 11, "rollout record: want 11 fields, got " + std::to_string(f.size()));
    RolloutRecord r;
    r.sample_id = parse_int(f[0]);
    r.loop_index = static_cast<int>(parse_int(f[1]));
    r.response.format_ok = parse_int(f[2]) != 0;
    if (f[3] == "c") {
        r.response.answer = static_cast<int>(parse_int(f[4]));
    } else if (f[3] == "n") {
        r.response.answer = parse_double(f[4]);
    } else {
        throw IoError("rollout record: bad answer kind '" + f[3] + "'");
    }
    r.format_reward = parse_double(f[5]);
    r.task_reward = parse_double(f[6]);
    r.composite = parse_double(f[7]);
    r.success = parse_int(f[8]) != 0;
    r.rng_seed = parse_u64(f[9]);
    r.counter = parse_u64(f[10]);
    return r;
}

RolloutLogWriter::RolloutLogWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_.good()) throw IoError("cannot open for writing: " + path);
}

void RolloutLogWriter::write(const RolloutRecord& record) {
    out_ << rollout_record_line(record) << '\n';
    ++lines_;
}

void RolloutLogWriter::flush() { out_.flush(); }

std::vector<RolloutRecord> read_rollout_log(const std::string& path) {
    // Drop a crash-truncated unterminated tail so any prefix stays parseable.
    const std::vector<std::string> lines = read_lines(path, true);
    std::vector<RolloutRecord> records;
    records.reserve(lines.size());
    for (const std::string& line : lines) {
        if (line.empty()) continue;
        records.push_back(parse_rollout_record(line));
    }
    return records;
}

// --- tabular exports --------------------------------------------------------------

void write_stats_csv(const std::string& path, const std::map<SampleId, SampleStats>& stats) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open for writing: " + path);
    out << "sample_id,skill,rollout_count,success_count,success_rate,prev_success_rate,delta,"
           "stagnation\n";
    for (const auto& [id, s] : stats) {
        out << id << ',' << skill_name(s.skill) << ',' << s.rollout_count << ','
            << s.success_count << ',' << format_double(s.success_rate) << ','
            << (s.prev_success_rate ? format_double(*s.prev_success_rate) : std::string()) << ','
            << format_double(s.delta) << ',' << format_double(s.stagnation) << '\n';
    }
    require(out.good(), "write failed: " + path);
}

void write_history_csv(const std::string& path, const LoopHistory& history) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open for writing: " + path);
    out << history_header() << '\n';
    for (const PhaseRow& row : history) {
        out << row.loop << ',' << phase_name(row.phase) << ','
            << format_double(row.heldout_embodied) << ',' << format_double(row.heldout_general);
        for (double v : row.train_rate_by_skill) out << ',' << format_double(v);
        for (double v : row.heldout_by_skill) out << ',' << format_double(v);
        for (double v : row.stagnation_by_skill) out << ',' << format_double(v);
        out << ',' << row.rl_size << ',' << row.weak_size << ',' << row.related_size << ','
            << row.replay_size << ',' << row.rl_epochs_run << ',' << row.rollouts_used << ','
            << row.grad_touches_used << '\n';
    }
    require(out.good(), "write failed: " + path);
}

LoopHistory read_history_csv(const std::string& path) {
    const std::vector<std::string> lines = read_lines(path, false);
    require(!lines.empty() && lines[0] == history_header(), "not a history file: " + path);
    LoopHistory history;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::vector<std::string> f = split_fields(lines[i], ',');
        require(f.size() == 29, "history line " + std::to_string(i + 1) + ": want 29 fields");
        PhaseRow row;
        std::size_t k = 0;
        row.loop = static_cast<int>(parse_int(f[k++]));
        if (f[k] == "RL") {
            row.phase = Phase::RL;
        } else if (f[k] == "SFT") {
            row.phase = Phase::SFT;
        } else {
            throw IoError("history line " + std::to_string(i + 1) + ": bad phase '" + f[k] + "'");
        }
        ++k;
        row.heldout_embodied = parse_double(f[k++]);
        row.heldout_general = parse_double(f[k++]);
        for (double& v : row.train_rate_by_skill) v = parse_double(f[k++]);
        for (double& v : row.heldout_by_skill) v = parse_double(f[k++]);
        for (double& v : row.stagnation_by_skill) v = parse_double(f[k++]);
        row.rl_size = static_cast<int>(parse_int(f[k++]));
        row.weak_size = static_cast<int>(parse_int(f[k++]));
        row.related_size = static_cast<int>(parse_int(f[k++]));
        row.replay_size = static_cast<int>(parse_int(f[k++]));
        row.rl_epochs_run = static_cast<int>(parse_int(f[k++]));
        row.rollouts_used = static_cast<std::uint64_t>(parse_int(f[k++]));
        row.grad_touches_used = static_cast<std::uint64_t>(parse_int(f[k++]));
        history.push_back(row);
    }
    return history;
}

void write_summary(const std::string& path, const std::map<std::string, std::string>& kv) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open for writing: " + path);
    for (const auto& [key, value] : kv) out << key << '=' << value << '\n';
    require(out.good(), "write failed: " + path);
}

std::map<std::string, std::string> read_summary(const std::string& path) {
    std::map<std::string, std::string> kv;
    for (const std::string& line : read_lines(path, false)) {
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        require(eq != std::string::npos, "summary line without '=': " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open for writing: " + path);
    out << content;
    require(out.good(), "write failed: " + path);
}

}  // namespace dppo
