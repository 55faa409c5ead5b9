#pragma once

#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "kevo/agents.hpp"
#include "kevo/domain.hpp"
#include "kevo/evaluator.hpp"
#include "kevo/result.hpp"
#include "kevo/roofline.hpp"
#include "kevo/strategy_pool.hpp"

namespace kevo {

/// Deterministic uniform draw in [0, n) driven only by the generator's bit
/// stream, so replays do not depend on the standard library's distribution
/// implementation.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n);

struct EngineOptions {
    int permits = 1;          // concurrent optimize_individual tasks
    int archive_top_n = 3;    // individuals archived into the pool per generation
    int retrieval_k = 5;      // retrieved strategies per generation prompt
    int repair_retries = 2;   // revise/evaluate attempts per failing candidate
    double early_stop_rel_improvement = 0.01;
    std::string checkpoint_dir;     // empty disables checkpoint files
    std::string checkpoint_context; // serialized JSON embedded in checkpoints (the manifest)
    int halt_after_generations = 0; // session budget; 0 = unlimited
};

/// Per-generation outcome entry feeding reports and telemetry. Every
/// individual the engine ever optimized appears in exactly one record.
struct EvaluatedEntry {
    std::string id;
    std::optional<double> latency_ms;
    bool correct = false;
    std::vector<std::string> tags;
    std::string strategy_id;
    std::optional<std::string> parent_kernel_id;
    std::optional<std::string> parent_strategy_id;
};

struct GenerationRecord {
    int epoch = 1;
    int generation = 1;
    int population_size = 0;
    std::vector<EvaluatedEntry> entries;
    std::optional<std::string> best_id;
    std::optional<double> best_latency_ms;
    std::optional<double> best_so_far_latency_ms;
};

/// Full engine state; checkpoints serialize it losslessly.
struct RunState {
    EvolutionConfig config;
    TaskDefinition task;
    RooflineVerdict verdict;
    int epoch = 1;
    int generation = 0; // last completed generation within the epoch
    Population population;
    std::optional<Individual> best_so_far;
    std::vector<Individual> epoch_best; // top evaluated individuals this epoch
    KernelSource epoch_seed_kernel;     // K^init of the current epoch
    std::optional<PerfMetrics> epoch_seed_metrics;
    std::map<std::string, PerfMetrics> parent_metrics; // id -> kernel-parent metrics
    std::string rng_state;
    std::uint64_t next_id = 1;
    std::map<std::string, std::int64_t> telemetry;
    std::vector<GenerationRecord> generation_records;
    std::vector<int> population_sizes; // initial size, then after each crossover
    std::vector<std::vector<std::string>> epoch_top_ids; // per finished epoch
    std::string provider_state; // serialized provider snapshot, empty if none
    bool completed = false;
};

nlohmann::json to_json(const RunState& state);
RunState run_state_from_json(const nlohmann::json& j);

struct EngineError {
    enum class Kind { Config, Selection, Agent, Persistence } kind = Kind::Config;
    std::string message;
};

/// One individual per strategy, all sharing k_init; generation 0.
Population initialize_population(const KernelSource& k_init, const std::vector<Strategy>& strategies,
                                 int epoch, IdGen& ids);

struct KernelDonor {
    KernelSource kernel;
    std::string donor_individual_id;
    std::optional<PerfMetrics> donor_metrics;
};

struct SelectionResult {
    std::vector<KernelDonor> kernels;    // length nk
    std::vector<Strategy> strategies;    // length ns
};

/// Elitism first, then tournaments; kernels deduplicated by donor individual
/// id, strategies by normalized body; shortfall filled by repeating the best
/// items. Fails when the population has no evaluated-correct individual.
Result<SelectionResult, EngineError> tournament_elitism(const Population& pop, int nk, int ns,
                                                        const RooflineVerdict& verdict,
                                                        std::mt19937_64& rng, int tournament_size,
                                                        int elite_count);

/// Full cartesian product of donors and strategies: nk x ns individuals with
/// lineage naming both parents; generation incremented.
Population crossover_pairing(const std::vector<KernelDonor>& kernels,
                             const std::vector<Strategy>& strategies, int epoch, int generation,
                             IdGen& ids);

/// The evolution loop: orchestrates agents, evaluator, roofline guidance, and
/// the strategy pool over E epochs of G generations.
class SceEngine {
public:
    SceEngine(const Agents& agents, EvalBackend& backend, StrategyPool& pool,
              TaskDefinition task, EvolutionConfig config, RooflineVerdict verdict,
              EngineOptions options);

    /// Runs from scratch. When k_init is absent the kernel generator produces
    /// the starting kernel. Returns the best individual ever evaluated.
    Result<Individual, EngineError> run(std::optional<KernelSource> k_init);

    /// Continues a checkpointed run to completion.
    Result<Individual, EngineError> resume(RunState state);

    /// Provider whose internal state rides along in checkpoints (the scripted
    /// backend's call counters); optional.
    void attach_provider_state(ChatProvider& provider) { provider_for_state_ = &provider; }

    const RunState& state() const { return state_; }

    /// Applies one optimization cycle (up to max_optimization_times rounds of
    /// apply -> repair -> evaluate, then alignment) to a single individual.
    /// The aligned strategy takes the pre-allocated id so concurrent calls
    /// stay replay-deterministic.
    Individual optimize_individual(const Individual& ind,
                                   const std::string& aligned_strategy_id) const;

private:
    Result<Unit, EngineError> start_epoch(int epoch, const KernelSource& k_init,
                                          const std::optional<PerfMetrics>& seed_metrics);
    Result<Unit, EngineError> run_generation();
    Result<Unit, EngineError> finish_epoch();
    Result<Individual, EngineError> drive();
    void write_checkpoint();
    void update_best_trackers();
    std::mt19937_64 rng_from_state() const;
    void store_rng(const std::mt19937_64& rng);

    const Agents& agents_;
    EvalBackend& backend_;
    StrategyPool& pool_;
    GuidanceTags guidance_;
    EngineOptions options_;
    RunState state_;
    ChatProvider* provider_for_state_ = nullptr;
};

} // namespace kevo
