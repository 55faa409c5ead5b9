#include "kevo/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kevo/agents.hpp"
#include "kevo/llm_provider.hpp"
#include "kevo/roofline.hpp"
#include "kevo/strategy_pool.hpp"

namespace kevo {

using nlohmann::json;

namespace {

namespace fs = std::filesystem;

std::string resolve_path(const std::string& base_dir, const std::string& path) {
    if (path.empty() || base_dir.empty()) return path;
    fs::path p(path);
    if (p.is_absolute()) return path;
    return (fs::path(base_dir) / p).lexically_normal().string();
}

std::string timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buffer;
}

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open()) return std::nullopt;
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace

json RunManifest::to_manifest_json() const {
    json provider{{"backend", provider_backend}};
    if (!provider_fixture_path.empty()) provider["fixture_path"] = provider_fixture_path;
    if (provider_backend == "http") {
        provider["http"] = json{{"base_url", http.base_url},
                                {"path", http.path},
                                {"model", http.model},
                                {"api_key_env", http.api_key_env},
                                {"connect_timeout_s", http.connect_timeout_s},
                                {"read_timeout_s", http.read_timeout_s},
                                {"total_timeout_ms", http.total_timeout_ms},
                                {"max_in_flight", http.max_in_flight},
                                {"retry",
                                 json{{"max_retries", http.retry.max_retries},
                                      {"initial_delay_ms", http.retry.initial_delay.count()},
                                      {"backoff_multiplier", http.retry.backoff_multiplier}}}};
    }

    json evaluator{{"backend", evaluator_backend}};
    if (evaluator_backend == "simulated") {
        evaluator["base_latency_ms"] = simulated.base_latency_ms;
        if (!cost_model_path.empty()) evaluator["cost_model_path"] = cost_model_path;
    } else {
        evaluator["real"] = json{{"compiler_path", real.compiler_path},
                                 {"compiler_flags", real.compiler_flags},
                                 {"reference_runner", real.reference_runner},
                                 {"profiler_path", real.profiler_path},
                                 {"profiler_flags", real.profiler_flags},
                                 {"device_index", real.device_index},
                                 {"work_dir", real.work_dir},
                                 {"execution_timeout_s", real.execution_timeout_s}};
    }

    json j{{"task", to_json(task)},
           {"config", to_json(config)},
           {"gpu_spec_path", gpu_spec_path},
           {"provider", std::move(provider)},
           {"evaluator", std::move(evaluator)},
           {"output_dir", output_dir},
           {"agents",
            json{{"generation_retries", agent_options.generation_retries},
                 {"history_examples", agent_options.history_examples}}},
           {"engine",
            json{{"permits", engine_options.permits},
                 {"archive_top_n", engine_options.archive_top_n},
                 {"retrieval_k", engine_options.retrieval_k},
                 {"repair_retries", engine_options.repair_retries},
                 {"early_stop_rel_improvement", engine_options.early_stop_rel_improvement}}}};
    if (!pool_path.empty()) j["pool_path"] = pool_path;
    if (!external_strategies_path.empty())
        j["external_strategies_path"] = external_strategies_path;
    if (!template_dir.empty()) j["template_dir"] = template_dir;
    if (!initial_kernel_path.empty()) j["initial_kernel_path"] = initial_kernel_path;
    return j;
}

Result<RunManifest, std::string> manifest_from_json(const json& j, const std::string& base_dir) {
    RunManifest m;
    try {
        m.task = task_definition_from_json(j.at("task"));
        m.config = evolution_config_from_json(j.at("config"));
        m.gpu_spec_path = resolve_path(base_dir, j.at("gpu_spec_path").get<std::string>());

        const auto& provider = j.at("provider");
        m.provider_backend = provider.at("backend").get<std::string>();
        if (provider.contains("fixture_path"))
            m.provider_fixture_path =
                resolve_path(base_dir, provider.at("fixture_path").get<std::string>());
        if (provider.contains("http")) {
            const auto& http = provider.at("http");
            m.http.base_url = http.value("base_url", "");
            m.http.path = http.value("path", std::string("/v1/chat/completions"));
            m.http.model = http.value("model", "");
            m.http.api_key_env = http.value("api_key_env", std::string("KP_PROVIDER_KEY"));
            m.http.connect_timeout_s = http.value("connect_timeout_s", 10);
            m.http.read_timeout_s = http.value("read_timeout_s", 120);
            m.http.total_timeout_ms = http.value("total_timeout_ms", 0);
            m.http.max_in_flight = http.value("max_in_flight", 4);
            if (http.contains("retry")) {
                const auto& retry = http.at("retry");
                m.http.retry.max_retries = retry.value("max_retries", 3);
                m.http.retry.initial_delay =
                    std::chrono::milliseconds(retry.value("initial_delay_ms", 1000));
                m.http.retry.backoff_multiplier = retry.value("backoff_multiplier", 2.0);
            }
        }

        const auto& evaluator = j.at("evaluator");
        m.evaluator_backend = evaluator.at("backend").get<std::string>();
        m.simulated.base_latency_ms = evaluator.value("base_latency_ms", 10.0);
        if (evaluator.contains("cost_model_path"))
            m.cost_model_path =
                resolve_path(base_dir, evaluator.at("cost_model_path").get<std::string>());
        if (evaluator.contains("real")) {
            const auto& real = evaluator.at("real");
            m.real.compiler_path = real.value("compiler_path", std::string("nvcc"));
            m.real.compiler_flags = real.value("compiler_flags", std::vector<std::string>{});
            m.real.reference_runner = real.value("reference_runner", std::string{});
            m.real.profiler_path = real.value("profiler_path", std::string("ncu"));
            m.real.profiler_flags = real.value("profiler_flags", std::vector<std::string>{});
            m.real.device_index = real.value("device_index", 0);
            m.real.work_dir = resolve_path(base_dir, real.value("work_dir", std::string(".")));
            m.real.execution_timeout_s = real.value("execution_timeout_s", 120);
        }

        if (j.contains("pool_path"))
            m.pool_path = resolve_path(base_dir, j.at("pool_path").get<std::string>());
        if (j.contains("external_strategies_path"))
            m.external_strategies_path =
                resolve_path(base_dir, j.at("external_strategies_path").get<std::string>());
        if (j.contains("template_dir"))
            m.template_dir = resolve_path(base_dir, j.at("template_dir").get<std::string>());
        m.output_dir = resolve_path(base_dir, j.value("output_dir", std::string("out")));
        if (j.contains("initial_kernel_path"))
            m.initial_kernel_path =
                resolve_path(base_dir, j.at("initial_kernel_path").get<std::string>());

        if (j.contains("agents")) {
            const auto& agents = j.at("agents");
            m.agent_options.generation_retries = agents.value("generation_retries", 2);
            m.agent_options.history_examples = agents.value("history_examples", 2);
        }
        m.agent_options.parallel_samples = m.config.parallel_samples;

        if (j.contains("engine")) {
            const auto& engine = j.at("engine");
            m.engine_options.permits = engine.value("permits", 1);
            m.engine_options.archive_top_n = engine.value("archive_top_n", 3);
            m.engine_options.retrieval_k = engine.value("retrieval_k", 5);
            m.engine_options.repair_retries = engine.value("repair_retries", 2);
            m.engine_options.early_stop_rel_improvement =
                engine.value("early_stop_rel_improvement", 0.01);
        }
    } catch (const std::exception& e) {
        return std::string("invalid manifest: ") + e.what();
    }
    return m;
}

Result<RunManifest, std::string> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open()) return std::string("cannot open manifest: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) return std::string("manifest is not valid JSON: " + path);
    return manifest_from_json(j, fs::path(path).parent_path().string());
}

namespace {

struct Assembly {
    std::unique_ptr<ChatProvider> provider;
    std::unique_ptr<EvalBackend> backend;
    std::unique_ptr<StrategyPool> pool;
    std::unique_ptr<Agents> agents;
    GpuSpec gpu_spec;
    RooflineVerdict verdict;
    bool verdict_from_prophet = false;
};

/// Validates manifest references; returns the first problem naming its path.
std::optional<std::string> check_manifest_files(const RunManifest& m) {
    if (!fs::exists(m.gpu_spec_path)) return "GpuSpec file not found: " + m.gpu_spec_path;
    if (m.provider_backend == "scripted" && !fs::exists(m.provider_fixture_path))
        return "provider fixture file not found: " + m.provider_fixture_path;
    if (!m.initial_kernel_path.empty() && !fs::exists(m.initial_kernel_path))
        return "initial kernel file not found: " + m.initial_kernel_path;
    if (!m.template_dir.empty() && !fs::is_directory(m.template_dir))
        return "template directory not found: " + m.template_dir;
    if (!m.external_strategies_path.empty() && !fs::exists(m.external_strategies_path))
        return "external strategy file not found: " + m.external_strategies_path;
    if (!m.cost_model_path.empty() && !fs::exists(m.cost_model_path))
        return "cost model file not found: " + m.cost_model_path;
    return std::nullopt;
}

Result<GpuSpec, std::string> load_gpu_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open()) return std::string("cannot open GpuSpec file: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) return std::string("GpuSpec file is not valid JSON: " + path);
    GpuSpec spec;
    try {
        spec = gpu_spec_from_json(j);
    } catch (const std::exception& e) {
        return std::string("GpuSpec file ") + path + ": " + e.what();
    }
    const auto violations = validate_gpu_spec(spec);
    if (!violations.empty()) {
        std::string message = "GpuSpec file " + path + " invalid:";
        for (const auto& v : violations) message += " " + v + ";";
        return message;
    }
    return spec;
}

Result<Assembly, std::pair<int, std::string>> assemble(const RunManifest& m,
                                                       bool skip_prophet = false) {
    using Err = std::pair<int, std::string>;
    Assembly a;

    if (auto missing = check_manifest_files(m)) return Err{kExitValidation, *missing};

    auto spec = load_gpu_spec(m.gpu_spec_path);
    if (!spec) return Err{kExitValidation, spec.error()};
    a.gpu_spec = spec.value();

    if (m.provider_backend == "scripted") {
        auto provider = ScriptedProvider::from_file(m.provider_fixture_path);
        if (!provider) return Err{kExitValidation, provider.error().message};
        a.provider = std::move(provider.value());
    } else if (m.provider_backend == "http") {
        a.provider = std::make_unique<HttpChatProvider>(m.http);
    } else {
        return Err{kExitValidation, "unknown provider backend: " + m.provider_backend};
    }

    if (m.evaluator_backend == "simulated") {
        SimulatedBackendConfig cfg = m.simulated;
        if (!m.cost_model_path.empty()) {
            auto model = CostModel::from_json_file(m.cost_model_path);
            if (!model) return Err{kExitValidation, model.error()};
            cfg.cost_model = model.value();
        }
        a.backend = std::make_unique<SimulatedBackend>(cfg);
    } else if (m.evaluator_backend == "real") {
        a.backend = std::make_unique<RealBackend>(m.real);
    } else {
        return Err{kExitValidation, "unknown evaluator backend: " + m.evaluator_backend};
    }

    if (!m.pool_path.empty()) {
        auto pool = StrategyPool::open(m.pool_path);
        if (!pool) return Err{kExitRuntime, pool.error().message};
        a.pool = std::make_unique<StrategyPool>(std::move(pool.value()));
    } else {
        a.pool = std::make_unique<StrategyPool>();
    }
    if (!m.external_strategies_path.empty()) {
        auto seeded = a.pool->seed_external(m.external_strategies_path);
        if (!seeded) return Err{kExitValidation, seeded.error().message};
    }

    TemplateLibrary templates;
    if (!m.template_dir.empty()) {
        auto loaded = TemplateLibrary::load(m.template_dir);
        if (!loaded) return Err{kExitValidation, loaded.error().message};
        templates = loaded.value();
    }
    a.agents = std::make_unique<Agents>(*a.provider, std::move(templates), m.agent_options);

    // Roofline placement: explicit task counts when available, otherwise the
    // prophet estimates them (MiddleZone on estimation failure). A resumed
    // run skips estimation; the checkpoint's verdict is authoritative.
    if (skip_prophet) {
        a.verdict = middle_zone_fallback(a.gpu_spec);
    } else if (m.task.flops && m.task.bytes) {
        a.verdict = classify(a.gpu_spec, arithmetic_intensity(*m.task.flops, *m.task.bytes));
    } else {
        a.verdict_from_prophet = true;
        auto estimate = a.agents->roofline_prophet(m.task.description, a.gpu_spec);
        if (estimate && estimate.value().second > 0.0) {
            a.verdict = classify(a.gpu_spec, arithmetic_intensity(estimate.value().first,
                                                                  estimate.value().second));
        } else {
            a.verdict = middle_zone_fallback(a.gpu_spec);
        }
    }
    return a;
}

int exit_code_for(const EngineError& error) {
    switch (error.kind) {
        case EngineError::Kind::Config: return kExitValidation;
        case EngineError::Kind::Selection: return kExitRuntime;
        case EngineError::Kind::Persistence: return kExitRuntime;
        case EngineError::Kind::Agent: return kExitProvider;
    }
    return kExitRuntime;
}

void print_plan(const RunManifest& m, const std::optional<RooflineVerdict>& verdict,
                std::ostream& out) {
    out << "plan for task " << m.task.task_id << "\n";
    out << "  epochs: " << m.config.epochs << ", generations per epoch: " << m.config.generations
        << "\n";
    out << "  population sizes per epoch: " << m.config.ns_list[0];
    for (int g = 1; g <= m.config.generations; ++g)
        out << " -> "
            << m.config.nk_list[static_cast<std::size_t>(g - 1)] *
                   m.config.ns_list[static_cast<std::size_t>(g)];
    out << "\n";
    out << "  provider: " << m.provider_backend << ", evaluator: " << m.evaluator_backend << "\n";
    if (verdict) {
        out << "  roofline zone: " << to_string(verdict->zone)
            << " (ai=" << verdict->arithmetic_intensity << ", thresholds " << verdict->low_threshold
            << ".." << verdict->high_threshold << ")\n";
    } else {
        out << "  roofline zone: estimated at runtime\n";
    }
}

int finish_run(const RunManifest& m, SceEngine& engine,
               const Result<Individual, EngineError>& outcome, std::ostream& out,
               std::ostream& err) {
    if (!outcome) {
        err << "run failed: " << outcome.error().message << "\n";
        return exit_code_for(outcome.error());
    }

    fs::create_directories(m.output_dir);
    const Individual& best = outcome.value();
    {
        std::ofstream kernel_out(m.output_dir + "/best_kernel.cu", std::ios::trunc);
        kernel_out << best.kernel.source_text;
    }
    {
        json report = build_report(engine.state());
        report["generated_at"] = timestamp_now();
        std::ofstream report_out(m.output_dir + "/report.json", std::ios::trunc);
        report_out << report.dump(2) << "\n";
    }

    if (!engine.state().completed) {
        out << "halted after session budget; resume from the latest checkpoint in "
            << m.output_dir << "/checkpoints\n";
    }
    out << "best kernel: individual " << best.id;
    if (best.metrics && best.metrics->avg_latency_ms)
        out << ", latency " << *best.metrics->avg_latency_ms << " ms";
    out << "\n";
    out << "artifacts: " << m.output_dir << "/best_kernel.cu, " << m.output_dir
        << "/report.json\n";
    return kExitOk;
}

} // namespace

int cmd_run(const std::string& manifest_path, const CliOptions& options, std::ostream& out,
            std::ostream& err) {
    auto manifest = load_manifest(manifest_path);
    if (!manifest) {
        err << manifest.error() << "\n";
        return kExitValidation;
    }
    const RunManifest& m = manifest.value();

    const auto violations = validate_config(m.config);
    if (!violations.empty()) {
        err << "invalid config:";
        for (const auto& v : violations) err << " " << v << ";";
        err << "\n";
        return kExitValidation;
    }

    if (options.dry_run) {
        if (auto missing = check_manifest_files(m)) {
            err << *missing << "\n";
            return kExitValidation;
        }
        auto spec = load_gpu_spec(m.gpu_spec_path);
        if (!spec) {
            err << spec.error() << "\n";
            return kExitValidation;
        }
        std::optional<RooflineVerdict> verdict;
        if (m.task.flops && m.task.bytes)
            verdict = classify(spec.value(), arithmetic_intensity(*m.task.flops, *m.task.bytes));
        print_plan(m, verdict, out);
        return kExitOk;
    }

    auto assembly = assemble(m);
    if (!assembly) {
        err << assembly.error().second << "\n";
        return assembly.error().first;
    }
    Assembly& a = assembly.value();

    std::optional<KernelSource> k_init;
    if (!m.initial_kernel_path.empty()) {
        auto text = read_file(m.initial_kernel_path);
        if (!text) {
            err << "cannot open file: " << m.initial_kernel_path << "\n";
            return kExitValidation;
        }
        k_init = KernelSource{m.task.task_id, *text, m.task.description};
    }

    EngineOptions engine_options = m.engine_options;
    engine_options.checkpoint_dir = m.output_dir + "/checkpoints";
    engine_options.checkpoint_context = m.to_manifest_json().dump();
    engine_options.halt_after_generations = options.max_generations;

    SceEngine engine(*a.agents, *a.backend, *a.pool, m.task, m.config, a.verdict, engine_options);
    engine.attach_provider_state(*a.provider);
    auto outcome = engine.run(std::move(k_init));
    return finish_run(m, engine, outcome, out, err);
}

int cmd_resume(const std::string& checkpoint_path, std::ostream& out, std::ostream& err) {
    std::ifstream in(checkpoint_path);
    if (!in.is_open()) {
        err << "cannot open checkpoint: " << checkpoint_path << "\n";
        return kExitValidation;
    }
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("state") ||
        !doc.contains("manifest")) {
        err << "checkpoint is not a valid run snapshot: " << checkpoint_path << "\n";
        return kExitValidation;
    }

    RunState state;
    try {
        state = run_state_from_json(doc.at("state"));
    } catch (const std::exception& e) {
        err << "checkpoint state is corrupt: " << checkpoint_path << ": " << e.what() << "\n";
        return kExitValidation;
    }

    auto manifest = manifest_from_json(doc.at("manifest"), "");
    if (!manifest) {
        err << manifest.error() << "\n";
        return kExitValidation;
    }
    const RunManifest& m = manifest.value();

    if (state.completed) {
        out << "run already completed; nothing to resume\n";
        return kExitOk;
    }

    auto assembly = assemble(m, /*skip_prophet=*/true);
    if (!assembly) {
        err << assembly.error().second << "\n";
        return assembly.error().first;
    }
    Assembly& a = assembly.value();

    EngineOptions engine_options = m.engine_options;
    engine_options.checkpoint_dir = m.output_dir + "/checkpoints";
    engine_options.checkpoint_context = m.to_manifest_json().dump();

    SceEngine engine(*a.agents, *a.backend, *a.pool, m.task, m.config, state.verdict,
                     engine_options);
    engine.attach_provider_state(*a.provider);
    auto outcome = engine.resume(std::move(state));
    return finish_run(m, engine, outcome, out, err);
}

int cmd_report(const std::string& run_dir, bool as_json, std::ostream& out, std::ostream& err) {
    const std::string path = run_dir + "/report.json";
    std::ifstream in(path);
    if (!in.is_open()) {
        err << "no report found: " << path << "\n";
        return kExitValidation;
    }
    json report = json::parse(in, nullptr, false);
    if (report.is_discarded()) {
        err << "report is not valid JSON: " << path << "\n";
        return kExitRuntime;
    }
    if (as_json) {
        out << report.dump(2) << "\n";
    } else {
        render_report_text(report, out);
    }
    return kExitOk;
}

int cmd_pool_import(const std::string& file, const std::string& pool_path, std::ostream& out,
                    std::ostream& err) {
    auto pool = StrategyPool::open(pool_path);
    if (!pool) {
        err << pool.error().message << "\n";
        return kExitRuntime;
    }

    // Detect the line format: full pool records carry a record_id.
    std::ifstream probe(file);
    if (!probe.is_open()) {
        err << "cannot open file: " << file << "\n";
        return kExitValidation;
    }
    std::string first_line;
    while (std::getline(probe, first_line)) {
        if (first_line.find_first_not_of(" \t\r") != std::string::npos) break;
    }
    const json first = json::parse(first_line, nullptr, false);
    const bool is_records = first.is_object() && first.contains("record_id");

    if (is_records) {
        auto imported = pool.value().import_records(file);
        if (!imported) {
            err << imported.error().message;
            if (imported.error().line > 0) err << " (line " << imported.error().line << ")";
            err << "\n";
            return imported.error().kind == PoolError::Kind::Format ? kExitValidation
                                                                    : kExitRuntime;
        }
        out << "imported " << imported.value() << " pool records\n";
        return kExitOk;
    }

    auto seeded = pool.value().seed_external(file);
    if (!seeded) {
        err << seeded.error().message;
        if (seeded.error().line > 0) err << " (line " << seeded.error().line << ")";
        err << "\n";
        return seeded.error().kind == PoolError::Kind::Format ? kExitValidation : kExitRuntime;
    }
    out << "imported " << seeded.value() << " external strategies\n";
    return kExitOk;
}

int cmd_pool_export(const std::string& file, const std::string& pool_path, std::ostream& out,
                    std::ostream& err) {
    auto pool = StrategyPool::open(pool_path);
    if (!pool) {
        err << pool.error().message << "\n";
        return kExitRuntime;
    }
    auto exported = pool.value().export_records(file);
    if (!exported) {
        err << exported.error().message << "\n";
        return kExitRuntime;
    }
    out << "exported " << pool.value().records().size() << " pool records to " << file << "\n";
    return kExitOk;
}

json build_report(const RunState& state) {
    json generations = json::array();
    for (const auto& r : state.generation_records) {
        json entries = json::array();
        for (const auto& e : r.entries) {
            json entry{{"id", e.id}, {"correct", e.correct}, {"tags", e.tags},
                       {"strategy_id", e.strategy_id}};
            if (e.latency_ms) entry["latency_ms"] = *e.latency_ms;
            if (e.parent_kernel_id) entry["parent_kernel_id"] = *e.parent_kernel_id;
            if (e.parent_strategy_id) entry["parent_strategy_id"] = *e.parent_strategy_id;
            entries.push_back(std::move(entry));
        }
        json record{{"epoch", r.epoch},
                    {"generation", r.generation},
                    {"population_size", r.population_size},
                    {"entries", std::move(entries)}};
        if (r.best_id) record["best_id"] = *r.best_id;
        if (r.best_latency_ms) record["best_latency_ms"] = *r.best_latency_ms;
        if (r.best_so_far_latency_ms)
            record["best_so_far_latency_ms"] = *r.best_so_far_latency_ms;
        generations.push_back(std::move(record));
    }

    json telemetry = json::object();
    for (const auto& [key, value] : state.telemetry) telemetry[key] = value;

    json report{{"task_id", state.task.task_id},
                {"roofline_zone", to_string(state.verdict.zone)},
                {"population_sizes", state.population_sizes},
                {"generations", std::move(generations)},
                {"epoch_top_ids", state.epoch_top_ids},
                {"telemetry", std::move(telemetry)},
                {"completed", state.completed}};
    if (state.best_so_far) {
        report["best"] = to_json(*state.best_so_far);
        json tags = json::array();
        for (const auto& tag : extract_tags(state.best_so_far->kernel))
            tags.push_back(tag.to_string());
        report["best_tags"] = std::move(tags);
    }
    return report;
}

void render_report_text(const json& report, std::ostream& out) {
    out << "task: " << report.value("task_id", std::string("?")) << "\n";
    out << "roofline zone: " << report.value("roofline_zone", std::string("?")) << "\n";
    if (report.contains("population_sizes")) {
        out << "population sizes:";
        for (const auto& size : report.at("population_sizes")) out << " " << size;
        out << "\n";
    }
    if (report.contains("generations")) {
        for (const auto& r : report.at("generations")) {
            out << "epoch " << r.value("epoch", 0) << " generation " << r.value("generation", 0)
                << ": population " << r.value("population_size", 0);
            if (r.contains("best_latency_ms"))
                out << ", best latency " << r.at("best_latency_ms").get<double>() << " ms";
            if (r.contains("best_so_far_latency_ms"))
                out << " (best so far " << r.at("best_so_far_latency_ms").get<double>() << " ms)";
            out << "\n";
        }
    }
    if (report.contains("best")) {
        const auto& best = report.at("best");
        out << "best individual: " << best.value("id", std::string("?"));
        if (best.contains("metrics") && best.at("metrics").contains("avg_latency_ms"))
            out << ", latency " << best.at("metrics").at("avg_latency_ms").get<double>() << " ms";
        out << "\n";
        if (report.contains("best_tags")) {
            out << "applied tags:";
            for (const auto& tag : report.at("best_tags")) out << " " << tag.get<std::string>();
            out << "\n";
        }
        // Lineage chain of the best individual, newest first.
        if (report.contains("generations")) {
            std::map<std::string, json> by_id;
            for (const auto& r : report.at("generations"))
                for (const auto& e : r.at("entries")) by_id[e.at("id").get<std::string>()] = e;
            std::string cursor = best.value("id", std::string{});
            out << "lineage:";
            int hops = 0;
            while (!cursor.empty() && hops++ < 64) {
                out << " " << cursor;
                auto it = by_id.find(cursor);
                if (it == by_id.end() || !it->second.contains("parent_kernel_id")) break;
                cursor = it->second.at("parent_kernel_id").get<std::string>();
                if (by_id.count(cursor)) out << " <-";
            }
            out << "\n";
        }
    }
    out << (report.value("completed", false) ? "run completed\n" : "run not completed\n");
}

} // namespace kevo
