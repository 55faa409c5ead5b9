#include <doctest.h>

#include <nlohmann/json.hpp>
#include <set>

#include "kevo/engine.hpp"
#include "support/test_support.hpp"

using namespace kevo;

namespace {

RooflineVerdict toy_verdict() {
    GpuSpec spec{"toy", 1e12, {{"slow", 1e13}, {"fast", 1e14}}};
    return classify(spec, 1000.0);
}

TaskDefinition toy_task() {
    TaskDefinition t;
    t.task_id = "toy";
    t.description = "elementwise multiply, fp32, n=1M";
    t.flops = 8e9;
    t.bytes = 4e9;
    return t;
}

std::vector<Strategy> make_strategies(int n) {
    std::vector<Strategy> out;
    for (int i = 0; i < n; ++i) {
        out.push_back({"s" + std::to_string(i + 1), "t" + std::to_string(i),
                       "body " + std::to_string(i), {}, StrategyOrigin::Generated});
    }
    return out;
}

Individual evaluated(const std::string& id, double latency, const std::string& body = "") {
    Individual ind;
    ind.id = id;
    ind.kernel = {"toy", "kernel " + id, "d"};
    ind.strategy = {"s" + id, "t", body.empty() ? "body " + id : body, {},
                    StrategyOrigin::Aligned};
    PerfMetrics m;
    m.correct = true;
    m.avg_latency_ms = latency;
    ind.metrics = m;
    return ind;
}

EvolutionConfig small_config() {
    EvolutionConfig cfg;
    cfg.epochs = 1;
    cfg.generations = 2;
    cfg.ns_list = {3, 2, 2};
    cfg.nk_list = {2, 2};
    cfg.max_optimization_times = 1;
    cfg.parallel_samples = 1;
    cfg.tournament_size = 2;
    cfg.elite_count = 1;
    cfg.epoch_top_k = 2;
    cfg.rng_seed = 12345;
    return cfg;
}

/// Bundles the engine with everything it borrows, keeping lifetimes simple.
struct Harness {
    Harness(EvolutionConfig cfg, std::unique_ptr<ChatProvider> prov,
            EngineOptions opts = {}, SimulatedBackendConfig backend_cfg = {})
        : provider(std::move(prov)), agents(*provider, TemplateLibrary{}, agent_options(cfg)),
          backend(backend_cfg),
          engine(agents, backend, pool, toy_task(), cfg, toy_verdict(), opts) {
        engine.attach_provider_state(*provider);
    }
    static AgentOptions agent_options(const EvolutionConfig& cfg) {
        AgentOptions o;
        o.parallel_samples = cfg.parallel_samples;
        return o;
    }

    std::unique_ptr<ChatProvider> provider;
    Agents agents;
    SimulatedBackend backend;
    StrategyPool pool;
    SceEngine engine;
};

} // namespace

TEST_CASE("initialize_population shares the seed kernel and assigns unique ids") {
    IdGen ids;
    const KernelSource k{"toy", "seed kernel", "d"};
    const auto pop = initialize_population(k, make_strategies(3), 1, ids);
    REQUIRE(pop.individuals.size() == 3);
    CHECK(pop.generation == 0);
    std::set<std::string> seen;
    for (const auto& ind : pop.individuals) {
        CHECK(ind.kernel == k);
        CHECK(seen.insert(ind.id).second);
        CHECK_FALSE(ind.metrics.has_value());
    }
}

TEST_CASE("crossover_pairing builds the full cartesian product with lineage") {
    IdGen ids(100);
    std::vector<KernelDonor> kernels = {{{"toy", "ka", "d"}, "1", {}},
                                        {{"toy", "kb", "d"}, "2", {}}};
    const auto strategies = make_strategies(2);
    const auto pop = crossover_pairing(kernels, strategies, 1, 3, ids);
    REQUIRE(pop.individuals.size() == 4);
    CHECK(pop.generation == 3);
    std::set<std::string> seen;
    for (const auto& child : pop.individuals) {
        CHECK(seen.insert(child.id).second);
        CHECK(child.lineage.generation == 3);
        REQUIRE(child.lineage.parent_kernel_id.has_value());
        REQUIRE(child.lineage.parent_strategy_id.has_value());
    }
    CHECK(pop.individuals[0].kernel.source_text == "ka");
    CHECK(*pop.individuals[0].lineage.parent_kernel_id == "1");
    CHECK(*pop.individuals[0].lineage.parent_strategy_id == "s1");
    CHECK(pop.individuals[3].kernel.source_text == "kb");
    CHECK(*pop.individuals[3].lineage.parent_strategy_id == "s2");

    IdGen more(200);
    const auto degenerate = crossover_pairing({kernels[0]}, {strategies[0]}, 1, 1, more);
    CHECK(degenerate.individuals.size() == 1);
}

TEST_CASE("tournament_elitism always selects the elite kernel first") {
    Population pop;
    pop.epoch = 1;
    pop.generation = 0;
    pop.individuals = {evaluated("1", 2.0), evaluated("2", 3.0), evaluated("3", 4.0),
                       evaluated("4", 5.0)};
    for (int trial = 0; trial < 20; ++trial) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(trial));
        auto selection = tournament_elitism(pop, 2, 2, toy_verdict(), rng, 2, 1);
        REQUIRE(selection.ok());
        REQUIRE(selection.value().kernels.size() == 2);
        REQUIRE(selection.value().strategies.size() == 2);
        CHECK(selection.value().kernels[0].donor_individual_id == "1");
        CHECK(selection.value().strategies[0].body == "body 1");
    }
}

TEST_CASE("tournament_elitism fills shortfalls by repeating the best items") {
    Population pop;
    pop.individuals = {evaluated("1", 2.0), evaluated("2", 3.0)};
    std::mt19937_64 rng(7);
    auto selection = tournament_elitism(pop, 3, 2, toy_verdict(), rng, 2, 1);
    REQUIRE(selection.ok());
    REQUIRE(selection.value().kernels.size() == 3);
    // Only two distinct kernels exist; the third slot repeats the best.
    CHECK(selection.value().kernels[2].donor_individual_id ==
          selection.value().kernels[0].donor_individual_id);
    CHECK(selection.value().kernels[0].donor_individual_id == "1");
}

TEST_CASE("tournament_elitism dedups strategies by normalized body") {
    Population pop;
    pop.individuals = {evaluated("1", 2.0, "same  PLAN"), evaluated("2", 3.0, "same plan"),
                       evaluated("3", 4.0, "different plan")};
    std::mt19937_64 rng(11);
    auto selection = tournament_elitism(pop, 2, 2, toy_verdict(), rng, 3, 1);
    REQUIRE(selection.ok());
    REQUIRE(selection.value().strategies.size() == 2);
    CHECK(normalized_strategy_body(selection.value().strategies[0].body) !=
          normalized_strategy_body(selection.value().strategies[1].body));
}

TEST_CASE("tournament_elitism is deterministic for a fixed rng seed") {
    Population pop;
    for (int i = 0; i < 8; ++i)
        pop.individuals.push_back(evaluated(std::to_string(i + 1), 1.0 + i));
    auto pick = [&] {
        std::mt19937_64 rng(42);
        auto selection = tournament_elitism(pop, 4, 3, toy_verdict(), rng, 3, 1);
        REQUIRE(selection.ok());
        std::string sig;
        for (const auto& donor : selection.value().kernels) sig += donor.donor_individual_id + ",";
        for (const auto& s : selection.value().strategies) sig += s.id + ",";
        return sig;
    };
    CHECK(pick() == pick());
}

TEST_CASE("tournament_elitism fails without any correct individual") {
    Population pop;
    Individual broken;
    broken.id = "1";
    pop.individuals = {broken};
    std::mt19937_64 rng(1);
    auto selection = tournament_elitism(pop, 1, 1, toy_verdict(), rng, 2, 1);
    REQUIRE_FALSE(selection.ok());
    CHECK(selection.error().kind == EngineError::Kind::Selection);
}

TEST_CASE("optimize_individual keeps the best candidate of the round") {
    auto provider = std::make_unique<ScriptedProvider>(std::map<std::string, std::vector<std::string>>{
        {kRoleStrategyApplication,
         {"```cuda\n// @strategy: Tiling\n```", "```cuda\n// @strategy: Swizzle\n```"}},
        {kRoleStrategyAlignment,
         {"### STRATEGY\ntitle: a\ntags: Tiling\nbody:\naligned plan\n"}}});
    auto cfg = small_config();
    cfg.parallel_samples = 2; // two candidates per round: 6.0 and 8.5
    Harness h(cfg, std::move(provider));

    Individual ind;
    ind.id = "9";
    ind.kernel = {"toy", "plain", "d"};
    ind.strategy = {"s9", "t", "b", {}, StrategyOrigin::Generated};
    const auto result = h.engine.optimize_individual(ind, "77");
    REQUIRE(result.evaluated_correct());
    CHECK(*result.metrics->avg_latency_ms == doctest::Approx(6.0));
    CHECK(result.kernel.source_text.find("Tiling") != std::string::npos);
    CHECK(result.strategy.origin == StrategyOrigin::Aligned);
    CHECK(result.strategy.id == "77");
    CHECK(result.optimization_rounds_used == 1);
}

TEST_CASE("optimize_individual repairs failing candidates through the revisor") {
    auto provider = std::make_unique<ScriptedProvider>(std::map<std::string, std::vector<std::string>>{
        {kRoleStrategyApplication,
         {"```cuda\n// @compile_error: typo\n// @strategy: Tiling\n```"}},
        {kRoleKernelRevisor, {"```cuda\n// @strategy: Tiling\n```"}},
        {kRoleStrategyAlignment,
         {"### STRATEGY\ntitle: a\ntags: Tiling\nbody:\naligned plan\n"}}});
    Harness h(small_config(), std::move(provider));

    Individual ind;
    ind.id = "9";
    ind.kernel = {"toy", "plain", "d"};
    ind.strategy = {"s9", "t", "b", {}, StrategyOrigin::Generated};
    const auto result = h.engine.optimize_individual(ind, "78");
    REQUIRE(result.evaluated_correct());
    CHECK(*result.metrics->avg_latency_ms == doctest::Approx(6.0));
}

TEST_CASE("optimize_individual returns the input unevaluated when nothing succeeds") {
    auto provider = std::make_unique<ScriptedProvider>(std::map<std::string, std::vector<std::string>>{
        {kRoleStrategyApplication, {"```cuda\n// @compile_error: broken\n```"}},
        {kRoleKernelRevisor,
         {"```cuda\n// @compile_error: still broken\n```",
          "```cuda\n// @compile_error: broken again\n```"}}});
    Harness h(small_config(), std::move(provider));

    Individual ind;
    ind.id = "9";
    ind.kernel = {"toy", "plain original", "d"};
    ind.strategy = {"s9", "t", "b", {}, StrategyOrigin::Generated};
    const auto result = h.engine.optimize_individual(ind, "79");
    CHECK_FALSE(result.metrics.has_value());
    CHECK(result.kernel.source_text == "plain original");
    CHECK(result.strategy.id == "s9"); // alignment never ran
    CHECK(result.optimization_rounds_used == 1);
}

TEST_CASE("optimize_individual stops early below 1% relative improvement") {
    // Custom landscape: round 1 lands at 6.0, round 2 improves to 5.97 (0.5%),
    // so the loop stops after round 2 of a 3-round budget.
    CostModel model;
    model.multipliers = {{"fastA", 0.6}, {"tinyB", 0.995}, {"Other", 1.0}};
    auto provider = std::make_unique<ScriptedProvider>(std::map<std::string, std::vector<std::string>>{
        {kRoleStrategyApplication,
         {"```cuda\n// @strategy: fastA\n```",
          "```cuda\n// @strategy: fastA\n// @strategy: tinyB\n```",
          "```cuda\n// @strategy: fastA\n// @strategy: tinyB\n```"}},
        {kRoleProfileAnalyst, {"push on", "push on"}},
        {kRoleStrategyAlignment,
         {"### STRATEGY\ntitle: a\ntags: fastA\nbody:\naligned plan\n"}}});
    auto cfg = small_config();
    cfg.max_optimization_times = 3;
    Harness h(cfg, std::move(provider), {}, SimulatedBackendConfig{10.0, model});

    Individual ind;
    ind.id = "9";
    ind.kernel = {"toy", "plain", "d"};
    ind.strategy = {"s9", "t", "b", {}, StrategyOrigin::Generated};
    const auto result = h.engine.optimize_individual(ind, "80");
    REQUIRE(result.evaluated_correct());
    CHECK(*result.metrics->avg_latency_ms == doctest::Approx(5.97));
    CHECK(result.optimization_rounds_used == 2);

    // The third application fixture was never consumed.
    const auto snapshot = h.provider->state_snapshot();
    CHECK(snapshot.at("counters").at(kRoleStrategyApplication).get<int>() == 2);
}

TEST_CASE("run with the rule-based agent set produces the traced population sizes") {
    Harness h(small_config(), std::make_unique<test::RuleBasedProvider>(99));
    auto best = h.engine.run(KernelSource{"toy", "// seed\n", "d"});
    REQUIRE(best.ok());
    const auto& state = h.engine.state();
    CHECK(state.completed);
    const std::vector<int> expected_sizes = {3, 4, 4};
    CHECK(state.population_sizes == expected_sizes);
    CHECK(state.generation_records.size() == 2);
    CHECK(state.generation_records[0].population_size == 3);
    CHECK(state.generation_records[1].population_size == 4);
    REQUIRE(best.value().metrics.has_value());
    CHECK(best.value().metrics->correct);
}

TEST_CASE("run enforces config validity up front") {
    auto cfg = small_config();
    cfg.ns_list = {3, 2}; // wrong length
    Harness h(cfg, std::make_unique<test::RuleBasedProvider>(99));
    auto best = h.engine.run(KernelSource{"toy", "// seed\n", "d"});
    REQUIRE_FALSE(best.ok());
    CHECK(best.error().kind == EngineError::Kind::Config);
    CHECK(best.error().message.find("ns_list") != std::string::npos);
}

TEST_CASE("individual ids stay unique across every engine operation") {
    auto cfg = small_config();
    cfg.epochs = 2;
    cfg.generations = 2;
    Harness h(cfg, std::make_unique<test::RuleBasedProvider>(5));
    REQUIRE(h.engine.run(KernelSource{"toy", "// seed\n", "d"}).ok());
    std::set<std::string> ids;
    for (const auto& record : h.engine.state().generation_records)
        for (const auto& entry : record.entries) CHECK(ids.insert(entry.id).second);
    // Final (never-optimized) population ids are fresh too.
    for (const auto& ind : h.engine.state().population.individuals)
        CHECK(ids.insert(ind.id).second);
}

TEST_CASE("best_so_far latency never increases across generations") {
    auto cfg = small_config();
    cfg.epochs = 2;
    cfg.generations = 3;
    cfg.ns_list = {4, 3, 3, 3};
    cfg.nk_list = {2, 2, 2};
    cfg.epoch_top_k = 3;
    Harness h(cfg, std::make_unique<test::RuleBasedProvider>(21));
    REQUIRE(h.engine.run(KernelSource{"toy", "// seed\n", "d"}).ok());
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& record : h.engine.state().generation_records) {
        REQUIRE(record.best_so_far_latency_ms.has_value());
        CHECK(*record.best_so_far_latency_ms <= prev + 1e-12);
        prev = *record.best_so_far_latency_ms;
    }
}

TEST_CASE("the second epoch starts from the first epoch's best kernel") {
    auto cfg = small_config();
    cfg.epochs = 2;
    Harness h(cfg, std::make_unique<test::RuleBasedProvider>(31));
    REQUIRE(h.engine.run(KernelSource{"toy", "// seed\n", "d"}).ok());
    const auto& state = h.engine.state();
    REQUIRE(state.epoch_top_ids.size() == 2);
    REQUIRE_FALSE(state.epoch_top_ids[0].empty());

    // Find the epoch-1 best entry and collect its tags.
    const std::string best_id = state.epoch_top_ids[0][0];
    std::set<std::string> best_tags;
    for (const auto& record : state.generation_records) {
        if (record.epoch != 1) continue;
        for (const auto& entry : record.entries)
            if (entry.id == best_id) best_tags.insert(entry.tags.begin(), entry.tags.end());
    }
    REQUIRE_FALSE(best_tags.empty());

    // Epoch 2 seeds from that kernel, so every epoch-2 child kernel (built by
    // the union-applying rule agent) contains those tags.
    for (const auto& record : state.generation_records) {
        if (record.epoch != 2) continue;
        for (const auto& entry : record.entries) {
            if (!entry.correct) continue;
            const std::set<std::string> tags(entry.tags.begin(), entry.tags.end());
            for (const auto& tag : best_tags) CHECK(tags.count(tag) == 1);
        }
    }
}

TEST_CASE("selection failure after a successful generation re-seeds from best_so_far") {
    // Applications succeed for the first generation (3 individuals), then
    // produce incorrect kernels forever after.
    struct FlakyProvider : test::RuleBasedProvider {
        using test::RuleBasedProvider::RuleBasedProvider;
        ChatResult complete(const ChatRequest& req) override {
            if (req.role_label == kRoleStrategyApplication) {
                const int call = ++apply_calls;
                if (call > 3)
                    return ChatResponse{"```cuda\n// @incorrect: 1 1\n```", name(), 0.0};
            }
            if (req.role_label == kRoleKernelRevisor)
                return ChatResponse{"```cuda\n// @incorrect: 1 1\n```", name(), 0.0};
            return test::RuleBasedProvider::complete(req);
        }
        std::atomic<int> apply_calls{0};
    };
    Harness h(small_config(), std::make_unique<FlakyProvider>(1));
    auto best = h.engine.run(KernelSource{"toy", "// seed\n", "d"});
    REQUIRE(best.ok()); // gen 1 evaluated fine; gen 2 re-seeds, then the run ends
    CHECK(h.engine.state().telemetry.at("selection_reseeds") == 1);
    CHECK(h.engine.state().completed);
}

TEST_CASE("a run that never evaluates anything correct fails with a selection error") {
    struct BrokenProvider : test::RuleBasedProvider {
        using test::RuleBasedProvider::RuleBasedProvider;
        ChatResult complete(const ChatRequest& req) override {
            if (req.role_label == kRoleStrategyApplication ||
                req.role_label == kRoleKernelRevisor)
                return ChatResponse{"```cuda\n// @incorrect: 1 1\n```", name(), 0.0};
            return test::RuleBasedProvider::complete(req);
        }
    };
    Harness h(small_config(), std::make_unique<BrokenProvider>(1));
    auto best = h.engine.run(KernelSource{"toy", "// seed\n", "d"});
    REQUIRE_FALSE(best.ok());
    CHECK(best.error().kind == EngineError::Kind::Selection);
}

TEST_CASE("permit-bounded concurrency does not change the outcome") {
    auto run_with_permits = [&](int permits) {
        EngineOptions opts;
        opts.permits = permits;
        auto cfg = small_config();
        cfg.epochs = 2;
        Harness h(cfg, std::make_unique<test::RuleBasedProvider>(77), opts);
        REQUIRE(h.engine.run(KernelSource{"toy", "// seed\n", "d"}).ok());
        auto j = to_json(h.engine.state());
        j.erase("provider_state"); // scripted counters differ in interleaving only
        return j.dump();
    };
    CHECK(run_with_permits(1) == run_with_permits(4));
}

TEST_CASE("run state JSON round-trips losslessly") {
    Harness h(small_config(), std::make_unique<test::RuleBasedProvider>(3));
    REQUIRE(h.engine.run(KernelSource{"toy", "// seed\n", "d"}).ok());
    const auto encoded = to_json(h.engine.state());
    const auto decoded = run_state_from_json(encoded);
    CHECK(to_json(decoded).dump() == encoded.dump());
}

TEST_CASE("halting and resuming reproduces the uninterrupted run state") {
    test::TempDir dir("engine_resume");
    auto cfg = small_config();

    auto run_full = [&](const std::string& subdir) {
        EngineOptions opts;
        opts.checkpoint_dir = dir.join(subdir);
        Harness h(cfg, std::make_unique<test::RuleBasedProvider>(8), opts);
        REQUIRE(h.engine.run(KernelSource{"toy", "// seed\n", "d"}).ok());
        return to_json(h.engine.state()).dump();
    };
    const std::string uninterrupted = run_full("full");

    EngineOptions halted_opts;
    halted_opts.checkpoint_dir = dir.join("halted");
    halted_opts.halt_after_generations = 1;
    Harness first(cfg, std::make_unique<test::RuleBasedProvider>(8), halted_opts);
    REQUIRE(first.engine.run(KernelSource{"toy", "// seed\n", "d"}).ok());
    CHECK_FALSE(first.engine.state().completed);

    const auto ckpt = nlohmann::json::parse(
        test::read_text_file(dir.join("halted") + "/ckpt_e1_g1.json"));
    EngineOptions resume_opts;
    resume_opts.checkpoint_dir = dir.join("halted");
    Harness second(cfg, std::make_unique<test::RuleBasedProvider>(8), resume_opts);
    auto resumed = second.engine.resume(run_state_from_json(ckpt.at("state")));
    REQUIRE(resumed.ok());
    CHECK(to_json(second.engine.state()).dump() == uninterrupted);
}

TEST_CASE("resume of a completed state is a no-op returning the best individual") {
    Harness h(small_config(), std::make_unique<test::RuleBasedProvider>(8));
    auto best = h.engine.run(KernelSource{"toy", "// seed\n", "d"});
    REQUIRE(best.ok());
    auto state = h.engine.state();

    Harness fresh(small_config(), std::make_unique<test::RuleBasedProvider>(8));
    auto resumed = fresh.engine.resume(state);
    REQUIRE(resumed.ok());
    CHECK(resumed.value().id == best.value().id);
}

TEST_CASE("uniform_below stays in range and covers values") {
    std::mt19937_64 rng(4);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        const auto v = uniform_below(rng, 7);
        CHECK(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
}
