#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "kevo/domain.hpp"
#include "kevo/engine.hpp"
#include "kevo/evaluator.hpp"
#include "kevo/result.hpp"

namespace kevo {

// Stable exit-code contract for scripting.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitProvider = 3;

/// Everything a run needs, captured in one JSON file so runs are
/// reproducible. Secrets stay in the environment (KP_PROVIDER_KEY).
struct RunManifest {
    TaskDefinition task;
    EvolutionConfig config;
    std::string gpu_spec_path;
    std::string provider_backend = "scripted"; // "scripted" | "http"
    std::string provider_fixture_path;         // scripted backend
    HttpProviderConfig http;                   // http backend
    std::string evaluator_backend = "simulated"; // "simulated" | "real"
    SimulatedBackendConfig simulated;
    std::string cost_model_path; // optional override for the simulated landscape
    RealBackendConfig real;
    std::string pool_path;
    std::string external_strategies_path;
    std::string template_dir;
    std::string output_dir = "out";
    std::string initial_kernel_path;
    AgentOptions agent_options;
    EngineOptions engine_options;

    nlohmann::json to_manifest_json() const;
};

Result<RunManifest, std::string> load_manifest(const std::string& path);
Result<RunManifest, std::string> manifest_from_json(const nlohmann::json& j,
                                                    const std::string& base_dir);

struct CliOptions {
    bool dry_run = false;
    int max_generations = 0; // session budget, 0 = unlimited
};

int cmd_run(const std::string& manifest_path, const CliOptions& options, std::ostream& out,
            std::ostream& err);
int cmd_resume(const std::string& checkpoint_path, std::ostream& out, std::ostream& err);
int cmd_report(const std::string& run_dir, bool as_json, std::ostream& out, std::ostream& err);
int cmd_pool_import(const std::string& file, const std::string& pool_path, std::ostream& out,
                    std::ostream& err);
int cmd_pool_export(const std::string& file, const std::string& pool_path, std::ostream& out,
                    std::ostream& err);

/// Report JSON assembled from a finished (or halted) run state.
nlohmann::json build_report(const RunState& state);
void render_report_text(const nlohmann::json& report, std::ostream& out);

} // namespace kevo
