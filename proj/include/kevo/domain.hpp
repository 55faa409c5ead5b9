#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace kevo {

/// A kernel source artifact flowing through the evolution loop.
struct KernelSource {
    std::string task_id;
    std::string source_text;
    std::string description;

    bool operator==(const KernelSource&) const = default;
};

/// Canonical optimization-strategy vocabulary. Free-text strategies are
/// labelled with zero or more of these tags; anything outside the closed set
/// is carried verbatim as Other.
class StrategyTag {
public:
    enum class Kind {
        TensorCore,
        Tiling,
        VectorizedAccess,
        MemoryPadding,
        Swizzle,
        DoubleBuffering,
        MultiStagePipeline,
        AsyncCopy,
        PtxLevel,
        Other,
    };

    StrategyTag() : kind_(Kind::Other) {}
    explicit StrategyTag(Kind kind) : kind_(kind) {}
    static StrategyTag other(std::string name);

    /// Accepts the nine canonical names case-insensitively; everything else
    /// becomes Other with the trimmed input preserved.
    static StrategyTag parse(const std::string& name);

    Kind kind() const { return kind_; }
    bool is_other() const { return kind_ == Kind::Other; }
    const std::string& other_name() const { return other_name_; }
    std::string to_string() const;

    auto operator<=>(const StrategyTag&) const = default;

private:
    Kind kind_;
    std::string other_name_;
};

using TagSet = std::set<StrategyTag>;

enum class StrategyOrigin { Generated, Retrieved, Aligned, ExternalPool };

std::string to_string(StrategyOrigin origin);
StrategyOrigin strategy_origin_from_string(const std::string& text);

/// A natural-language optimization plan; the intermediate representation the
/// evolution loop crosses over and the translator agents turn into code.
struct Strategy {
    std::string id;
    std::string title;
    std::string body;
    TagSet tags;
    StrategyOrigin origin = StrategyOrigin::Generated;

    bool operator==(const Strategy&) const = default;
};

/// Lowercases and collapses whitespace; two strategies with equal normalized
/// bodies count as duplicates for distinctness checks and selection dedup.
std::string normalized_strategy_body(const std::string& body);

/// Measured (or simulated) kernel performance. Latency is absent whenever the
/// kernel is incorrect so broken kernels can never win on speed.
struct PerfMetrics {
    std::optional<double> avg_latency_ms;
    std::optional<double> sm_throughput_pct;
    std::optional<double> mem_throughput_pct;
    std::optional<double> dram_throughput_pct;
    std::optional<double> l2_hit_rate_pct;
    bool correct = false;

    bool operator==(const PerfMetrics&) const = default;
};

struct Lineage {
    int epoch = 1;
    int generation = 0;
    std::optional<std::string> parent_kernel_id;
    std::optional<std::string> parent_strategy_id;

    bool operator==(const Lineage&) const = default;
};

/// The unit of evolution: a (kernel, strategy) pair plus evaluation state.
struct Individual {
    std::string id;
    KernelSource kernel;
    Strategy strategy;
    std::optional<PerfMetrics> metrics;
    Lineage lineage;
    int optimization_rounds_used = 0;

    bool evaluated_correct() const { return metrics.has_value() && metrics->correct; }
    bool operator==(const Individual&) const = default;
};

struct Population {
    std::vector<Individual> individuals;
    int generation = 0;
    int epoch = 1;

    bool operator==(const Population&) const = default;
};

/// Parameters of one evolution run. ns_list holds [NS_0 .. NS_G] (length G+1),
/// nk_list holds [NK_1 .. NK_G] (length G).
struct EvolutionConfig {
    int epochs = 1;
    int generations = 1;
    std::vector<int> ns_list;
    std::vector<int> nk_list;
    int max_optimization_times = 1;
    int parallel_samples = 1;
    int tournament_size = 3;
    int elite_count = 1;
    int epoch_top_k = 3;
    std::uint64_t rng_seed = 0;

    bool operator==(const EvolutionConfig&) const = default;
};

/// Returns every violated config invariant, not just the first; empty means ok.
std::vector<std::string> validate_config(const EvolutionConfig& cfg);

struct GpuUnit {
    std::string name;
    double peak_flops_per_s = 0.0;

    bool operator==(const GpuUnit&) const = default;
};

struct GpuSpec {
    std::string name;
    double peak_bandwidth_bytes_per_s = 0.0;
    std::vector<GpuUnit> units;

    bool operator==(const GpuSpec&) const = default;
};

std::vector<std::string> validate_gpu_spec(const GpuSpec& spec);

/// Run-scoped id source: monotonically increasing integers rendered as
/// strings, so replays assign identical ids.
class IdGen {
public:
    IdGen() = default;
    explicit IdGen(std::uint64_t next) : next_(next) {}

    std::string alloc() { return std::to_string(next_++); }
    std::uint64_t peek() const { return next_; }

private:
    std::uint64_t next_ = 1;
};

// Canonical JSON encoding (snake_case field names). Used by checkpoints, the
// pool store, and reports; encode -> decode -> encode is bit-exact.
nlohmann::json to_json(const KernelSource&);
nlohmann::json to_json(const Strategy&);
nlohmann::json to_json(const PerfMetrics&);
nlohmann::json to_json(const Lineage&);
nlohmann::json to_json(const Individual&);
nlohmann::json to_json(const Population&);
nlohmann::json to_json(const EvolutionConfig&);
nlohmann::json to_json(const GpuSpec&);

KernelSource kernel_source_from_json(const nlohmann::json&);
Strategy strategy_from_json(const nlohmann::json&);
PerfMetrics perf_metrics_from_json(const nlohmann::json&);
Lineage lineage_from_json(const nlohmann::json&);
Individual individual_from_json(const nlohmann::json&);
Population population_from_json(const nlohmann::json&);
EvolutionConfig evolution_config_from_json(const nlohmann::json&);
GpuSpec gpu_spec_from_json(const nlohmann::json&);

} // namespace kevo
