#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kevo/domain.hpp"
#include "kevo/evaluator.hpp"
#include "kevo/llm_provider.hpp"
#include "kevo/result.hpp"
#include "kevo/roofline.hpp"
#include "kevo/strategy_pool.hpp"

namespace kevo {

struct TemplateError {
    std::string message;
};

/// Prompt text pair with {{name}} placeholders. Rendering is total: any
/// placeholder without a value is an error, never literal braces in output.
struct PromptTemplate {
    std::string role_label;
    std::string system_text;
    std::string user_text;

    Result<ChatRequest, TemplateError> render(
        const std::map<std::string, std::string>& values) const;
};

/// Placeholder names referenced by a template text.
std::vector<std::string> template_placeholders(const std::string& text);

/// Loads templates from a directory of text assets, one file per role with
/// optional per-zone variants:
///   <role>.<zone>.txt  (zone in {memory_bound, compute_bound, middle_zone})
///   <role>.txt         (used for zones without a variant)
/// Files contain a "[system]" section and a "[user]" section. Roles without
/// any file fall back to the built-in defaults.
class TemplateLibrary {
public:
    TemplateLibrary(); // built-in defaults only

    static Result<TemplateLibrary, TemplateError> load(const std::string& directory);

    PromptTemplate get(const std::string& role_label, RooflineZone zone) const;

private:
    // key: role or role + "." + zone
    std::map<std::string, PromptTemplate> templates_;
};

// Agent role labels; also the fixture keys of the scripted provider.
inline constexpr const char* kRoleKernelGenerator = "KernelGenerator";
inline constexpr const char* kRoleStrategyGenerator = "StrategyGenerator";
inline constexpr const char* kRoleStrategyApplication = "StrategyApplication";
inline constexpr const char* kRoleStrategyAlignment = "StrategyAlignment";
inline constexpr const char* kRoleKernelRevisor = "KernelRevisor";
inline constexpr const char* kRoleProfileAnalyst = "ProfileAnalyst";
inline constexpr const char* kRoleRooflineProphet = "RooflineProphet";

struct AgentError {
    enum class Kind {
        GenerationFailure,
        StrategyShortfall,
        ApplicationFailure,
        AlignmentFailure,
        RevisionFailure,
        ProphetFailure,
        Provider,
        Template,
    };
    Kind kind = Kind::Provider;
    std::string message;
    std::vector<std::string> diagnostics;
};

// Completion parsing. Kernels come only from fenced code blocks; strategies
// only from "### STRATEGY" blocks with title:/tags:/body: fields.
struct StrategyBlock {
    std::string title;
    TagSet tags;
    std::string body;
};

std::optional<std::string> extract_fenced_code(const std::string& completion);
std::vector<StrategyBlock> parse_strategy_blocks(const std::string& completion);
std::optional<std::pair<double, double>> parse_flops_bytes(const std::string& completion);

struct AgentOptions {
    int parallel_samples = 1;    // P: parallel queries per subtask
    int generation_retries = 2;  // extra completions when strategies fall short
    int history_examples = 2;    // pool records quoted in application prompts
};

/// Prompt construction and response parsing for the five agent roles. All
/// state lives in the inputs and the provider; safe for concurrent use across
/// individuals.
class Agents {
public:
    Agents(ChatProvider& provider, TemplateLibrary templates, AgentOptions options);

    /// Samples P completions and returns the first kernel that compiles and
    /// passes the correctness check.
    Result<KernelSource, AgentError> generate_vanilla_kernel(const TaskDefinition& task,
                                                             const GuidanceTags& g,
                                                             EvalBackend& backend) const;

    /// ns0 distinct strategies (distinct by normalized body) for the kernel,
    /// with retrieved strategies quoted in the prompt.
    Result<std::vector<Strategy>, AgentError> generate_strategies(
        const KernelSource& kernel, int ns0, const GuidanceTags& g,
        const std::vector<Strategy>& retrieved, IdGen& ids) const;

    /// P candidate kernels implementing the individual's strategy; unparseable
    /// samples are dropped (counted in telemetry), zero candidates is an error.
    Result<std::vector<KernelSource>, AgentError> apply_strategy(
        const Individual& ind, const GuidanceTags& g, const std::vector<PoolRecord>& history,
        const std::optional<std::string>& hints) const;

    /// Rewrites the strategy to describe what k_opt actually implements.
    Result<Strategy, AgentError> align_strategy(const KernelSource& k_opt, const Strategy& s_old,
                                                const GuidanceTags& g, IdGen& ids) const;

    /// First parseable repaired kernel out of P samples.
    Result<KernelSource, AgentError> revise_kernel(const KernelSource& kernel,
                                                   const std::string& diagnostics,
                                                   const GuidanceTags& g) const;

    /// Free-text bottleneck hints from the zone-focused metric subset.
    Result<std::string, AgentError> analyze_profile(const PerfMetrics& metrics,
                                                    const GuidanceTags& g) const;

    /// (flops, bytes) estimate for roofline placement when the task config
    /// does not supply explicit counts.
    Result<std::pair<double, double>, AgentError> roofline_prophet(
        const std::string& task_description, const GpuSpec& spec) const;

    const AgentOptions& options() const { return options_; }
    const std::map<std::string, std::int64_t>& telemetry() const { return telemetry_; }
    void clear_telemetry() { telemetry_.clear(); }

private:
    void bump(const std::string& counter, std::int64_t amount = 1) const;

    ChatProvider& provider_;
    TemplateLibrary templates_;
    AgentOptions options_;
    mutable std::map<std::string, std::int64_t> telemetry_;
    mutable std::mutex telemetry_mutex_;
};

} // namespace kevo
