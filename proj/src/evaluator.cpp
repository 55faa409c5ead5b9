#include "kevo/evaluator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace kevo {

using nlohmann::json;

json to_json(const TaskDefinition& t) {
    json j{{"task_id", t.task_id},
           {"description", t.description},
           {"tolerance", json{{"rtol", t.tolerance.rtol}, {"atol", t.tolerance.atol}}},
           {"seed_policy", json{{"base_seed", t.seed_policy.base_seed}}}};
    if (t.flops) j["flops"] = *t.flops;
    if (t.bytes) j["bytes"] = *t.bytes;
    return j;
}

TaskDefinition task_definition_from_json(const json& j) {
    TaskDefinition t;
    t.task_id = j.at("task_id").get<std::string>();
    t.description = j.at("description").get<std::string>();
    if (j.contains("tolerance")) {
        t.tolerance.rtol = j.at("tolerance").at("rtol").get<double>();
        t.tolerance.atol = j.at("tolerance").at("atol").get<double>();
    }
    if (j.contains("flops")) t.flops = j.at("flops").get<double>();
    if (j.contains("bytes")) t.bytes = j.at("bytes").get<double>();
    if (j.contains("seed_policy"))
        t.seed_policy.base_seed = j.at("seed_policy").at("base_seed").get<std::uint64_t>();
    return t;
}

bool outcome_is_correct(const EvalOutcome& outcome) {
    const auto* metrics = std::get_if<PerfMetrics>(&outcome);
    return metrics != nullptr && metrics->correct;
}

std::string describe_failure(const EvalOutcome& outcome) {
    if (const auto* e = std::get_if<CompileError>(&outcome))
        return "compile error: " + e->diagnostic;
    if (const auto* e = std::get_if<KernelRuntimeError>(&outcome))
        return "runtime error: " + e->diagnostic;
    if (const auto* e = std::get_if<IncorrectOutput>(&outcome)) {
        std::ostringstream oss;
        oss << "incorrect output: max_abs_diff=" << e->max_abs_diff
            << " max_rel_diff=" << e->max_rel_diff;
        return oss.str();
    }
    if (std::holds_alternative<EvalTimeout>(outcome)) return "timeout";
    return "";
}

CostModel CostModel::default_model() {
    CostModel model;
    model.multipliers = {
        {"Tiling", 0.60},        {"TensorCore", 0.35},    {"VectorizedAccess", 0.80},
        {"MemoryPadding", 0.90}, {"Swizzle", 0.85},       {"DoubleBuffering", 0.75},
        {"MultiStagePipeline", 0.70}, {"AsyncCopy", 0.80}, {"PtxLevel", 0.95},
        {"Other", 1.0},
    };
    model.conflicts = {{{"DoubleBuffering", "MultiStagePipeline"}, 0.15}};
    model.dependencies = {{"TensorCore", "Tiling"}};
    return model;
}

Result<CostModel, std::string> CostModel::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open()) return std::string("cannot open cost model file: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) return std::string("cost model file is not valid JSON: " + path);
    CostModel model;
    try {
        for (const auto& [tag, mult] : j.at("multipliers").items())
            model.multipliers[tag] = mult.get<double>();
        if (j.contains("conflicts")) {
            for (const auto& c : j.at("conflicts")) {
                Conflict conflict;
                conflict.tags = c.at("tags").get<std::vector<std::string>>();
                conflict.penalty = c.at("penalty").get<double>();
                model.conflicts.push_back(std::move(conflict));
            }
        }
        if (j.contains("dependencies")) {
            for (const auto& d : j.at("dependencies")) {
                model.dependencies.push_back({d.at("tag").get<std::string>(),
                                              d.at("requires").get<std::string>()});
            }
        }
    } catch (const std::exception& e) {
        return std::string("cost model file " + path + ": " + e.what());
    }
    return model;
}

namespace {

std::string trim_copy(const std::string& text) {
    auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

std::string tag_lookup_name(const StrategyTag& tag) {
    return tag.is_other() ? tag.other_name() : tag.to_string();
}

double clamp_pct(double value) { return std::clamp(value, 0.0, 100.0); }

} // namespace

PerfMetrics simulate_cost(const TagSet& tags, double base_latency_ms, const CostModel& model) {
    if (base_latency_ms <= 0.0)
        throw std::invalid_argument("simulate_cost: base_latency_ms must be positive");

    std::set<std::string> present;
    for (const auto& tag : tags) present.insert(tag_lookup_name(tag));

    double product = 1.0;
    for (const auto& tag : tags) {
        const std::string name = tag_lookup_name(tag);
        bool dependency_met = true;
        for (const auto& dep : model.dependencies) {
            if (dep.tag == name && !present.count(dep.requires_tag)) {
                dependency_met = false;
                break;
            }
        }
        if (!dependency_met) continue; // multiplier voided, acts as 1.0
        double multiplier = 1.0;
        if (auto it = model.multipliers.find(name); it != model.multipliers.end()) {
            multiplier = it->second;
        } else if (tag.is_other()) {
            if (auto other = model.multipliers.find("Other"); other != model.multipliers.end())
                multiplier = other->second;
        }
        product *= multiplier;
    }

    double penalty = 0.0;
    for (const auto& conflict : model.conflicts) {
        const bool all_present = std::all_of(conflict.tags.begin(), conflict.tags.end(),
                                             [&](const std::string& t) { return present.count(t) > 0; });
        if (all_present && !conflict.tags.empty()) penalty += conflict.penalty;
    }

    const double latency = base_latency_ms * product * (1.0 + penalty);
    const double reduction = std::clamp(1.0 - latency / base_latency_ms, 0.0, 1.0);

    PerfMetrics metrics;
    metrics.correct = true;
    metrics.avg_latency_ms = latency;
    metrics.sm_throughput_pct = clamp_pct(100.0 * (0.20 + 0.80 * reduction));
    metrics.mem_throughput_pct = clamp_pct(100.0 * (0.25 + 0.75 * reduction));
    metrics.dram_throughput_pct = clamp_pct(100.0 * (0.15 + 0.70 * reduction));
    metrics.l2_hit_rate_pct = clamp_pct(100.0 * (0.30 + 0.60 * reduction));
    return metrics;
}

namespace {

/// First `// @<marker>:` payload in the source, if any.
std::optional<std::string> find_marker(const std::string& source, const std::string& marker) {
    std::istringstream lines(source);
    std::string line;
    const std::string needle = "// @" + marker;
    while (std::getline(lines, line)) {
        auto pos = line.find(needle);
        if (pos == std::string::npos) continue;
        auto colon = line.find(':', pos + needle.size() - 1);
        if (colon == std::string::npos) return std::string{};
        return trim_copy(line.substr(colon + 1));
    }
    return std::nullopt;
}

} // namespace

TagSet extract_tags(const KernelSource& kernel) {
    TagSet tags;
    std::istringstream lines(kernel.source_text);
    std::string line;
    while (std::getline(lines, line)) {
        auto pos = line.find("// @strategy:");
        if (pos == std::string::npos) continue;
        const std::string name = trim_copy(line.substr(pos + std::string("// @strategy:").size()));
        if (!name.empty()) tags.insert(StrategyTag::parse(name));
    }
    return tags;
}

namespace {

std::vector<std::string> parse_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    fields.push_back(field);
    return fields;
}

std::optional<double> parse_metric_value(std::string text) {
    // Profiler exports use thousands separators inside quoted values.
    text.erase(std::remove(text.begin(), text.end(), ','), text.end());
    text = trim_copy(text);
    if (text.empty()) return std::nullopt;
    errno = 0;
    char* end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || (end && *end != '\0')) return std::nullopt;
    return value;
}

} // namespace

const std::map<std::string, std::string>& profiler_metric_names() {
    static const std::map<std::string, std::string> names = {
        {"sm_throughput_pct", "sm__throughput.avg.pct_of_peak_sustained_elapsed"},
        {"mem_throughput_pct", "gpu__compute_memory_throughput.avg.pct_of_peak_sustained_elapsed"},
        {"dram_throughput_pct", "dram__throughput.avg.pct_of_peak_sustained_elapsed"},
        {"l2_hit_rate_pct", "lts__t_sector_hit_rate.pct"},
    };
    return names;
}

Result<PerfMetrics, ProfilerParseError> parse_profiler_report(
    const std::string& csv_text, const std::vector<std::string>& wanted_fields) {
    std::istringstream lines(csv_text);
    std::string line;
    std::vector<std::string> header;
    while (std::getline(lines, line)) {
        if (trim_copy(line).empty()) continue;
        header = parse_csv_row(line);
        break;
    }
    if (header.empty()) return ProfilerParseError{"profiler report is empty"};

    auto column_of = [&](const std::string& name) -> int {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    };
    const int name_col = column_of("Metric Name");
    const int value_col = column_of("Metric Value");
    if (name_col < 0 || value_col < 0)
        return ProfilerParseError{"profiler report has no Metric Name / Metric Value columns"};

    std::map<std::string, std::string> wanted; // profiler metric name -> field
    for (const auto& field : wanted_fields) {
        auto it = profiler_metric_names().find(field);
        if (it != profiler_metric_names().end()) wanted[it->second] = field;
    }

    PerfMetrics metrics;
    metrics.correct = true;
    while (std::getline(lines, line)) {
        if (trim_copy(line).empty()) continue;
        auto row = parse_csv_row(line);
        if (static_cast<int>(row.size()) <= std::max(name_col, value_col)) continue;
        auto it = wanted.find(row[static_cast<std::size_t>(name_col)]);
        if (it == wanted.end()) continue;
        auto value = parse_metric_value(row[static_cast<std::size_t>(value_col)]);
        if (!value) continue;
        const std::string& field = it->second;
        if (field == "sm_throughput_pct") metrics.sm_throughput_pct = *value;
        else if (field == "mem_throughput_pct") metrics.mem_throughput_pct = *value;
        else if (field == "dram_throughput_pct") metrics.dram_throughput_pct = *value;
        else if (field == "l2_hit_rate_pct") metrics.l2_hit_rate_pct = *value;
    }
    return metrics;
}

EvalOutcome evaluate(EvalBackend& backend, const KernelSource& kernel, const TaskDefinition& task) {
    try {
        auto compiled = backend.compile(kernel, task);
        if (!compiled) return compiled.error();

        EvalOutcome check = backend.check_correctness(kernel, task);
        if (!std::holds_alternative<PerfMetrics>(check)) return check;

        for (int i = 0; i < kWarmupRuns; ++i) {
            auto run = backend.execute(kernel, task, task.seed_policy.seed_for(i));
            if (!run) {
                if (run.error().kind == EvalBackend::ExecFailure::Kind::Timeout)
                    return EvalTimeout{};
                return KernelRuntimeError{run.error().diagnostic};
            }
        }

        double total_ms = 0.0;
        for (int i = 0; i < kTimedRuns; ++i) {
            auto run = backend.execute(kernel, task, task.seed_policy.seed_for(kWarmupRuns + i));
            if (!run) {
                if (run.error().kind == EvalBackend::ExecFailure::Kind::Timeout)
                    return EvalTimeout{};
                return KernelRuntimeError{run.error().diagnostic};
            }
            total_ms += run.value();
        }

        PerfMetrics metrics;
        if (auto profiled = backend.profile(kernel, task)) metrics = *profiled;
        metrics.correct = true;
        metrics.avg_latency_ms = total_ms / static_cast<double>(kTimedRuns);
        return metrics;
    } catch (const std::exception& e) {
        return KernelRuntimeError{std::string("evaluator exception: ") + e.what()};
    }
}

SimulatedBackend::SimulatedBackend(SimulatedBackendConfig config) : config_(std::move(config)) {}

Result<Unit, CompileError> SimulatedBackend::compile(const KernelSource& kernel,
                                                     const TaskDefinition&) {
    if (auto diag = find_marker(kernel.source_text, "compile_error"))
        return CompileError{diag->empty() ? "simulated compile failure" : *diag};
    return Unit{};
}

EvalOutcome SimulatedBackend::check_correctness(const KernelSource& kernel,
                                                const TaskDefinition&) {
    if (auto diag = find_marker(kernel.source_text, "runtime_error"))
        return KernelRuntimeError{diag->empty() ? "simulated runtime failure" : *diag};
    if (find_marker(kernel.source_text, "timeout")) return EvalTimeout{};
    if (auto payload = find_marker(kernel.source_text, "incorrect")) {
        IncorrectOutput bad{1.0, 1.0};
        std::istringstream iss(*payload);
        iss >> bad.max_abs_diff >> bad.max_rel_diff;
        return bad;
    }
    PerfMetrics ok;
    ok.correct = true;
    return ok;
}

Result<double, EvalBackend::ExecFailure> SimulatedBackend::execute(const KernelSource& kernel,
                                                                   const TaskDefinition&,
                                                                   std::uint64_t) {
    if (auto diag = find_marker(kernel.source_text, "runtime_error"))
        return ExecFailure{ExecFailure::Kind::Runtime,
                           diag->empty() ? "simulated runtime failure" : *diag};
    if (find_marker(kernel.source_text, "timeout"))
        return ExecFailure{ExecFailure::Kind::Timeout, "simulated timeout"};
    const PerfMetrics metrics =
        simulate_cost(extract_tags(kernel), config_.base_latency_ms, config_.cost_model);
    return *metrics.avg_latency_ms;
}

std::optional<PerfMetrics> SimulatedBackend::profile(const KernelSource& kernel,
                                                     const TaskDefinition&) {
    return simulate_cost(extract_tags(kernel), config_.base_latency_ms, config_.cost_model);
}

std::vector<std::string> build_compile_command(const RealBackendConfig& cfg,
                                               const std::string& source_path,
                                               const std::string& binary_path) {
    std::vector<std::string> cmd{cfg.compiler_path};
    cmd.insert(cmd.end(), cfg.compiler_flags.begin(), cfg.compiler_flags.end());
    cmd.push_back("-o");
    cmd.push_back(binary_path);
    cmd.push_back(source_path);
    return cmd;
}

std::vector<std::string> build_run_command(const RealBackendConfig& cfg,
                                           const std::string& binary_path,
                                           std::uint64_t input_seed) {
    return {binary_path, "--device", std::to_string(cfg.device_index), "--seed",
            std::to_string(input_seed)};
}

std::vector<std::string> build_reference_command(const RealBackendConfig& cfg,
                                                 const std::string& binary_path,
                                                 const TaskDefinition& task) {
    std::ostringstream rtol, atol;
    rtol << task.tolerance.rtol;
    atol << task.tolerance.atol;
    return {cfg.reference_runner, binary_path, task.task_id, "--rtol", rtol.str(),
            "--atol", atol.str()};
}

std::vector<std::string> build_profile_command(const RealBackendConfig& cfg,
                                               const std::string& binary_path,
                                               const std::string& csv_out_path) {
    std::vector<std::string> cmd{cfg.profiler_path};
    cmd.insert(cmd.end(), cfg.profiler_flags.begin(), cfg.profiler_flags.end());
    cmd.push_back("--csv");
    cmd.push_back("--log-file");
    cmd.push_back(csv_out_path);
    cmd.push_back(binary_path);
    return cmd;
}

namespace {

std::string shell_quote(const std::string& arg) {
    std::string out = "'";
    for (char c : arg) {
        if (c == '\'') out += "'\\''";
        else out.push_back(c);
    }
    out.push_back('\'');
    return out;
}

struct CommandResult {
    int exit_code = -1;
    std::string output;
};

CommandResult run_command(const std::vector<std::string>& argv) {
    std::string cmd;
    for (const auto& arg : argv) {
        if (!cmd.empty()) cmd.push_back(' ');
        cmd += shell_quote(arg);
    }
    cmd += " 2>&1";
    CommandResult result;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return result;
    std::array<char, 4096> buffer{};
    while (std::size_t n = fread(buffer.data(), 1, buffer.size(), pipe))
        result.output.append(buffer.data(), n);
    result.exit_code = pclose(pipe);
    return result;
}

// One profiling run per device at a time.
std::mutex& device_profile_mutex(int device_index) {
    static std::mutex registry_mutex;
    static std::map<int, std::mutex> mutexes;
    std::lock_guard<std::mutex> lock(registry_mutex);
    return mutexes[device_index];
}

std::optional<double> scan_labeled_number(const std::string& text, const std::string& label) {
    auto pos = text.find(label);
    if (pos == std::string::npos) return std::nullopt;
    pos += label.size();
    while (pos < text.size() && (text[pos] == ':' || text[pos] == ' ' || text[pos] == '=')) ++pos;
    char* end = nullptr;
    const double value = std::strtod(text.c_str() + pos, &end);
    if (end == text.c_str() + pos) return std::nullopt;
    return value;
}

} // namespace

RealBackend::RealBackend(RealBackendConfig config) : config_(std::move(config)) {}

Result<Unit, CompileError> RealBackend::compile(const KernelSource& kernel,
                                                const TaskDefinition& task) {
    const std::string source_path = config_.work_dir + "/" + task.task_id + ".cu";
    const std::string binary_path = config_.work_dir + "/" + task.task_id + ".bin";
    {
        std::ofstream out(source_path, std::ios::trunc);
        if (!out.is_open()) return CompileError{"cannot write kernel source: " + source_path};
        out << kernel.source_text;
    }
    auto result = run_command(build_compile_command(config_, source_path, binary_path));
    if (result.exit_code != 0) return CompileError{result.output};
    return Unit{};
}

EvalOutcome RealBackend::check_correctness(const KernelSource&, const TaskDefinition& task) {
    if (config_.reference_runner.empty()) {
        PerfMetrics ok;
        ok.correct = true;
        return ok; // no reference configured; treat run-to-completion as correct
    }
    const std::string binary_path = config_.work_dir + "/" + task.task_id + ".bin";
    auto result = run_command(build_reference_command(config_, binary_path, task));
    if (result.exit_code == 0) {
        PerfMetrics ok;
        ok.correct = true;
        return ok;
    }
    const auto abs_diff = scan_labeled_number(result.output, "max_abs_diff");
    const auto rel_diff = scan_labeled_number(result.output, "max_rel_diff");
    if (abs_diff || rel_diff)
        return IncorrectOutput{abs_diff.value_or(0.0), rel_diff.value_or(0.0)};
    return KernelRuntimeError{result.output};
}

Result<double, EvalBackend::ExecFailure> RealBackend::execute(const KernelSource&,
                                                              const TaskDefinition& task,
                                                              std::uint64_t input_seed) {
    const std::string binary_path = config_.work_dir + "/" + task.task_id + ".bin";
    auto result = run_command(build_run_command(config_, binary_path, input_seed));
    if (result.exit_code != 0)
        return ExecFailure{ExecFailure::Kind::Runtime, result.output};
    if (auto latency = scan_labeled_number(result.output, "latency_ms")) return *latency;
    return ExecFailure{ExecFailure::Kind::Runtime,
                       "kernel binary did not report latency_ms in its output"};
}

std::optional<PerfMetrics> RealBackend::profile(const KernelSource&, const TaskDefinition& task) {
    std::lock_guard<std::mutex> permit(device_profile_mutex(config_.device_index));
    const std::string binary_path = config_.work_dir + "/" + task.task_id + ".bin";
    const std::string csv_path = config_.work_dir + "/" + task.task_id + ".ncu.csv";
    auto result = run_command(build_profile_command(config_, binary_path, csv_path));
    if (result.exit_code != 0) return std::nullopt;
    std::ifstream in(csv_path);
    if (!in.is_open()) return std::nullopt;
    std::stringstream buffer;
    buffer << in.rdbuf();
    auto parsed = parse_profiler_report(buffer.str());
    if (!parsed) return std::nullopt;
    return parsed.value();
}

} // namespace kevo
