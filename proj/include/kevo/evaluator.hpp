#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kevo/domain.hpp"
#include "kevo/result.hpp"

namespace kevo {

struct Tolerance {
    double rtol = 1e-3;
    double atol = 1e-2;
};

/// Per-execution input seeds derive from base_seed and the execution index,
/// so every timed run sees fresh but reproducible random inputs.
struct SeedPolicy {
    std::uint64_t base_seed = 0;

    std::uint64_t seed_for(int execution_index) const {
        return base_seed * 1000003ULL + static_cast<std::uint64_t>(execution_index);
    }
};

struct TaskDefinition {
    std::string task_id;
    std::string description; // operator, shapes, dtypes
    Tolerance tolerance;
    std::optional<double> flops;
    std::optional<double> bytes;
    SeedPolicy seed_policy;
};

nlohmann::json to_json(const TaskDefinition&);
TaskDefinition task_definition_from_json(const nlohmann::json&);

struct CompileError {
    std::string diagnostic;
};
struct KernelRuntimeError {
    std::string diagnostic;
};
struct IncorrectOutput {
    double max_abs_diff = 0.0;
    double max_rel_diff = 0.0;
};
struct EvalTimeout {};

using EvalOutcome =
    std::variant<PerfMetrics, CompileError, KernelRuntimeError, IncorrectOutput, EvalTimeout>;

bool outcome_is_correct(const EvalOutcome& outcome);
/// Human-readable diagnostic for failed outcomes (feeds the revisor prompt).
std::string describe_failure(const EvalOutcome& outcome);

/// Latency landscape for the simulated backend: per-tag multipliers, additive
/// penalties for conflicting tag combinations, and tag dependencies that void
/// a multiplier when unmet. Loadable as a fixture so tests can install custom
/// landscapes.
struct CostModel {
    struct Conflict {
        std::vector<std::string> tags;
        double penalty = 0.0;
    };
    struct Dependency {
        std::string tag;
        std::string requires_tag;
    };

    std::map<std::string, double> multipliers;
    std::vector<Conflict> conflicts;
    std::vector<Dependency> dependencies;

    static CostModel default_model();
    static Result<CostModel, std::string> from_json_file(const std::string& path);
};

/// Deterministic stand-in latency: base times the product of multipliers of
/// dependency-satisfied tags, times (1 + summed conflict penalties).
/// Utilizations are monotone in the achieved latency reduction.
PerfMetrics simulate_cost(const TagSet& tags, double base_latency_ms,
                          const CostModel& model = CostModel::default_model());

/// Scans kernel source for `// @strategy: <TagName>` marker lines.
TagSet extract_tags(const KernelSource& kernel);

struct ProfilerParseError {
    std::string message;
};

/// Parses a profiler CSV metric export (long format: one row per metric) into
/// the metric fields named in wanted_fields. Missing metrics stay absent.
Result<PerfMetrics, ProfilerParseError> parse_profiler_report(
    const std::string& csv_text,
    const std::vector<std::string>& wanted_fields = {"sm_throughput_pct", "mem_throughput_pct",
                                                     "dram_throughput_pct", "l2_hit_rate_pct"});

/// Default mapping from metric field names to profiler metric names.
const std::map<std::string, std::string>& profiler_metric_names();

/// Compile/run/profile surface behind evaluate(). Implementations decide what
/// an "execution" costs; evaluate() owns the measurement protocol.
class EvalBackend {
public:
    virtual ~EvalBackend() = default;

    struct ExecFailure {
        enum class Kind { Runtime, Timeout } kind = Kind::Runtime;
        std::string diagnostic;
    };

    virtual Result<Unit, CompileError> compile(const KernelSource& kernel,
                                               const TaskDefinition& task) = 0;
    /// Checks kernel output against the reference within task tolerances.
    virtual EvalOutcome check_correctness(const KernelSource& kernel,
                                          const TaskDefinition& task) = 0;
    /// One execution with the given input seed; returns wall latency in ms.
    virtual Result<double, ExecFailure> execute(const KernelSource& kernel,
                                                const TaskDefinition& task,
                                                std::uint64_t input_seed) = 0;
    /// Utilization metrics when the backend supports profiling.
    virtual std::optional<PerfMetrics> profile(const KernelSource& kernel,
                                               const TaskDefinition& task) = 0;
};

inline constexpr int kWarmupRuns = 10;
inline constexpr int kTimedRuns = 50;

/// Runs the benchmark protocol: compile, correctness check, kWarmupRuns
/// untimed executions, then kTimedRuns timed executions with per-execution
/// fresh input seeds; reports the arithmetic mean latency of the timed runs.
/// Never throws past this boundary; every failure maps to an EvalOutcome.
EvalOutcome evaluate(EvalBackend& backend, const KernelSource& kernel, const TaskDefinition& task);

struct SimulatedBackendConfig {
    double base_latency_ms = 10.0;
    CostModel cost_model = CostModel::default_model();
};

/// Desk-scale backend: latency comes from the cost model over the kernel's
/// strategy tags; failure markers in the source drive the failure paths.
///   // @compile_error: <msg>
///   // @runtime_error: <msg>
///   // @incorrect: <abs> <rel>
///   // @timeout
class SimulatedBackend : public EvalBackend {
public:
    explicit SimulatedBackend(SimulatedBackendConfig config = {});

    Result<Unit, CompileError> compile(const KernelSource& kernel,
                                       const TaskDefinition& task) override;
    EvalOutcome check_correctness(const KernelSource& kernel, const TaskDefinition& task) override;
    Result<double, ExecFailure> execute(const KernelSource& kernel, const TaskDefinition& task,
                                        std::uint64_t input_seed) override;
    std::optional<PerfMetrics> profile(const KernelSource& kernel,
                                       const TaskDefinition& task) override;

    const SimulatedBackendConfig& config() const { return config_; }

private:
    SimulatedBackendConfig config_;
};

/// Configuration for the subprocess-driven backend. Only command construction
/// and report parsing run in CI; the subprocess path needs a real toolchain
/// and device.
struct RealBackendConfig {
    std::string compiler_path = "nvcc";
    std::vector<std::string> compiler_flags;
    std::string reference_runner; // command producing reference outputs
    std::string profiler_path = "ncu";
    std::vector<std::string> profiler_flags;
    int device_index = 0;
    std::string work_dir = ".";
    int execution_timeout_s = 120;
};

std::vector<std::string> build_compile_command(const RealBackendConfig& cfg,
                                               const std::string& source_path,
                                               const std::string& binary_path);
std::vector<std::string> build_run_command(const RealBackendConfig& cfg,
                                           const std::string& binary_path, std::uint64_t input_seed);
std::vector<std::string> build_reference_command(const RealBackendConfig& cfg,
                                                 const std::string& binary_path,
                                                 const TaskDefinition& task);
std::vector<std::string> build_profile_command(const RealBackendConfig& cfg,
                                               const std::string& binary_path,
                                               const std::string& csv_out_path);

/// Subprocess-backed EvalBackend. Profiling runs are serialized per device.
class RealBackend : public EvalBackend {
public:
    explicit RealBackend(RealBackendConfig config);

    Result<Unit, CompileError> compile(const KernelSource& kernel,
                                       const TaskDefinition& task) override;
    EvalOutcome check_correctness(const KernelSource& kernel, const TaskDefinition& task) override;
    Result<double, ExecFailure> execute(const KernelSource& kernel, const TaskDefinition& task,
                                        std::uint64_t input_seed) override;
    std::optional<PerfMetrics> profile(const KernelSource& kernel,
                                       const TaskDefinition& task) override;

private:
    RealBackendConfig config_;
};

} // namespace kevo
