#include "kevo/engine.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace kevo {

using nlohmann::json;

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    assert(n > 0);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                (std::numeric_limits<std::uint64_t>::max() % n);
    std::uint64_t value;
    do {
        value = rng();
    } while (value >= limit);
    return value % n;
}

Population initialize_population(const KernelSource& k_init,
                                 const std::vector<Strategy>& strategies, int epoch, IdGen& ids) {
    Population pop;
    pop.generation = 0;
    pop.epoch = epoch;
    for (const auto& strategy : strategies) {
        Individual ind;
        ind.id = ids.alloc();
        ind.kernel = k_init;
        ind.strategy = strategy;
        ind.lineage.epoch = epoch;
        ind.lineage.generation = 0;
        pop.individuals.push_back(std::move(ind));
    }
    return pop;
}

namespace {

struct RankedView {
    std::vector<const Individual*> by_fitness;
};

RankedView rank_population(const Population& pop, const RooflineVerdict& verdict) {
    RankedView view;
    view.by_fitness.reserve(pop.individuals.size());
    for (const auto& ind : pop.individuals) view.by_fitness.push_back(&ind);
    std::sort(view.by_fitness.begin(), view.by_fitness.end(),
              [&](const Individual* a, const Individual* b) {
                  return fitness_key(*a, verdict) < fitness_key(*b, verdict);
              });
    return view;
}

/// Tournament of `size` distinct members drawn uniformly, ranked best-first.
std::vector<const Individual*> tournament_ranked(const Population& pop,
                                                 const RooflineVerdict& verdict,
                                                 std::mt19937_64& rng, int size) {
    const std::size_t n = pop.individuals.size();
    const std::size_t draw = std::min<std::size_t>(static_cast<std::size_t>(size), n);
    std::vector<std::size_t> indices(n);
    std::iota(indices.begin(), indices.end(), 0);
    // Partial Fisher-Yates: the first `draw` entries are the tournament.
    for (std::size_t i = 0; i < draw; ++i) {
        const std::size_t j = i + uniform_below(rng, n - i);
        std::swap(indices[i], indices[j]);
    }
    std::vector<const Individual*> drawn;
    drawn.reserve(draw);
    for (std::size_t i = 0; i < draw; ++i) drawn.push_back(&pop.individuals[indices[i]]);
    std::sort(drawn.begin(), drawn.end(), [&](const Individual* a, const Individual* b) {
        return fitness_key(*a, verdict) < fitness_key(*b, verdict);
    });
    return drawn;
}

} // namespace

Result<SelectionResult, EngineError> tournament_elitism(const Population& pop, int nk, int ns,
                                                        const RooflineVerdict& verdict,
                                                        std::mt19937_64& rng, int tournament_size,
                                                        int elite_count) {
    const bool any_correct = std::any_of(pop.individuals.begin(), pop.individuals.end(),
                                         [](const Individual& i) { return i.evaluated_correct(); });
    if (pop.individuals.empty() || !any_correct) {
        return EngineError{EngineError::Kind::Selection,
                           "selection failed: no evaluated-correct individual in the population"};
    }

    const RankedView ranked = rank_population(pop, verdict);

    SelectionResult out;
    std::set<std::string> kernel_ids;
    std::set<std::string> strategy_bodies;

    auto add_kernel = [&](const Individual& ind) {
        if (static_cast<int>(out.kernels.size()) >= nk) return false;
        if (!kernel_ids.insert(ind.id).second) return false;
        out.kernels.push_back(KernelDonor{ind.kernel, ind.id, ind.metrics});
        return true;
    };
    auto add_strategy = [&](const Individual& ind) {
        if (static_cast<int>(out.strategies.size()) >= ns) return false;
        if (!strategy_bodies.insert(normalized_strategy_body(ind.strategy.body)).second)
            return false;
        out.strategies.push_back(ind.strategy);
        return true;
    };

    const std::size_t elites =
        std::min<std::size_t>(static_cast<std::size_t>(elite_count), ranked.by_fitness.size());
    for (std::size_t i = 0; i < elites; ++i) {
        add_kernel(*ranked.by_fitness[i]);
        add_strategy(*ranked.by_fitness[i]);
    }

    // Tournament winners fill the remaining slots: the best not-yet-selected
    // member of each tournament wins it.
    int attempts = 20 * (nk + ns) + 20;
    while (static_cast<int>(out.kernels.size()) < nk && attempts-- > 0) {
        for (const Individual* ind : tournament_ranked(pop, verdict, rng, tournament_size))
            if (add_kernel(*ind)) break;
    }
    while (static_cast<int>(out.strategies.size()) < ns && attempts-- > 0) {
        for (const Individual* ind : tournament_ranked(pop, verdict, rng, tournament_size))
            if (add_strategy(*ind)) break;
    }

    // Shortfall: repeat the best items, cycling from the top.
    for (std::size_t i = 0; static_cast<int>(out.kernels.size()) < nk; ++i)
        out.kernels.push_back(out.kernels[i % kernel_ids.size()]);
    for (std::size_t i = 0; static_cast<int>(out.strategies.size()) < ns; ++i)
        out.strategies.push_back(out.strategies[i % strategy_bodies.size()]);

    return out;
}

Population crossover_pairing(const std::vector<KernelDonor>& kernels,
                             const std::vector<Strategy>& strategies, int epoch, int generation,
                             IdGen& ids) {
    Population pop;
    pop.epoch = epoch;
    pop.generation = generation;
    for (const auto& donor : kernels) {
        for (const auto& strategy : strategies) {
            Individual child;
            child.id = ids.alloc();
            child.kernel = donor.kernel;
            child.strategy = strategy;
            child.lineage.epoch = epoch;
            child.lineage.generation = generation;
            child.lineage.parent_kernel_id = donor.donor_individual_id;
            child.lineage.parent_strategy_id = strategy.id;
            pop.individuals.push_back(std::move(child));
        }
    }
    return pop;
}

SceEngine::SceEngine(const Agents& agents, EvalBackend& backend, StrategyPool& pool,
                     TaskDefinition task, EvolutionConfig config, RooflineVerdict verdict,
                     EngineOptions options)
    : agents_(agents), backend_(backend), pool_(pool), guidance_(guidance(verdict)),
      options_(std::move(options)) {
    state_.config = std::move(config);
    state_.task = std::move(task);
    state_.verdict = verdict;
}

std::mt19937_64 SceEngine::rng_from_state() const {
    std::mt19937_64 rng(state_.config.rng_seed);
    if (!state_.rng_state.empty()) {
        std::istringstream in(state_.rng_state);
        in >> rng;
    }
    return rng;
}

void SceEngine::store_rng(const std::mt19937_64& rng) {
    std::ostringstream out;
    out << rng;
    state_.rng_state = out.str();
}

Individual SceEngine::optimize_individual(const Individual& ind,
                                          const std::string& aligned_strategy_id) const {
    Individual current = ind;
    const auto history = pool_.recent_records(agents_.options().history_examples);

    std::optional<KernelSource> best_kernel;
    std::optional<PerfMetrics> best_metrics;
    std::optional<std::string> hints;
    int rounds_used = 0;

    auto candidate_better = [&](const PerfMetrics& a, const PerfMetrics& b) {
        // Round-local comparison: latency first, zone utilization as tiebreak;
        // earlier candidates win remaining ties.
        if (*a.avg_latency_ms != *b.avg_latency_ms) return *a.avg_latency_ms < *b.avg_latency_ms;
        auto util = [&](const PerfMetrics& m) {
            const double sm = m.sm_throughput_pct.value_or(0.0);
            const double mem = m.mem_throughput_pct.value_or(0.0);
            switch (guidance_.zone) {
                case RooflineZone::ComputeBound: return sm;
                case RooflineZone::MemoryBound: return mem;
                case RooflineZone::MiddleZone: return (sm + mem) / 2.0;
            }
            return 0.0;
        };
        return util(a) > util(b);
    };

    for (int round = 1; round <= state_.config.max_optimization_times; ++round) {
        auto candidates = agents_.apply_strategy(current, guidance_, history, hints);
        ++rounds_used;
        if (!candidates) break;

        std::optional<KernelSource> round_kernel;
        std::optional<PerfMetrics> round_metrics;
        for (auto candidate : candidates.value()) {
            EvalOutcome outcome = evaluate(backend_, candidate, state_.task);
            int repairs = 0;
            while (!outcome_is_correct(outcome) && repairs < options_.repair_retries &&
                   (std::holds_alternative<CompileError>(outcome) ||
                    std::holds_alternative<IncorrectOutput>(outcome))) {
                auto revised =
                    agents_.revise_kernel(candidate, describe_failure(outcome), guidance_);
                if (!revised) break;
                candidate = revised.value();
                outcome = evaluate(backend_, candidate, state_.task);
                ++repairs;
            }
            if (!outcome_is_correct(outcome)) continue;
            const auto& metrics = std::get<PerfMetrics>(outcome);
            if (!round_metrics || candidate_better(metrics, *round_metrics)) {
                round_metrics = metrics;
                round_kernel = candidate;
            }
        }

        if (!round_metrics) {
            if (best_metrics) break; // no progress possible this round
            continue;                // keep trying while nothing has succeeded yet
        }

        const bool had_best = best_metrics.has_value();
        const double before_latency = had_best ? *best_metrics->avg_latency_ms : 0.0;
        if (!had_best || candidate_better(*round_metrics, *best_metrics)) {
            best_metrics = round_metrics;
            best_kernel = round_kernel;
        }
        current.kernel = *best_kernel;
        current.metrics = best_metrics;

        if (had_best) {
            const double improvement =
                (before_latency - *best_metrics->avg_latency_ms) / before_latency;
            if (improvement < options_.early_stop_rel_improvement) break;
        }
        if (round < state_.config.max_optimization_times) {
            auto analysis = agents_.analyze_profile(*best_metrics, guidance_);
            if (analysis) hints = analysis.value();
        }
    }

    if (!best_metrics) {
        // Nothing evaluated correct in any round: the input comes back
        // unevaluated and will rank worst.
        Individual unevaluated = ind;
        unevaluated.metrics.reset();
        unevaluated.optimization_rounds_used = rounds_used;
        return unevaluated;
    }

    current.kernel = *best_kernel;
    current.metrics = best_metrics;
    current.optimization_rounds_used = rounds_used;

    IdGen aligned_id(std::strtoull(aligned_strategy_id.c_str(), nullptr, 10));
    auto aligned = agents_.align_strategy(*best_kernel, current.strategy, guidance_, aligned_id);
    if (aligned) current.strategy = aligned.value();
    return current;
}

Result<Unit, EngineError> SceEngine::start_epoch(int epoch, const KernelSource& k_init,
                                                 const std::optional<PerfMetrics>& seed_metrics) {
    state_.epoch = epoch;
    state_.generation = 0;
    state_.epoch_best.clear();
    state_.epoch_seed_kernel = k_init;
    state_.epoch_seed_metrics = seed_metrics;

    const auto retrieved = pool_.retrieve_strategies(k_init, options_.retrieval_k);
    IdGen ids(state_.next_id);
    auto strategies =
        agents_.generate_strategies(k_init, state_.config.ns_list[0], guidance_, retrieved, ids);
    if (!strategies) {
        return EngineError{EngineError::Kind::Agent,
                           "strategy generation failed for epoch " + std::to_string(epoch) + ": " +
                               strategies.error().message};
    }
    state_.population = initialize_population(k_init, strategies.value(), epoch, ids);
    state_.next_id = ids.peek();

    state_.parent_metrics.clear();
    if (seed_metrics) {
        for (const auto& ind : state_.population.individuals)
            state_.parent_metrics[ind.id] = *seed_metrics;
    }
    state_.population_sizes.push_back(static_cast<int>(state_.population.individuals.size()));
    return Unit{};
}

void SceEngine::update_best_trackers() {
    for (const auto& ind : state_.population.individuals) {
        if (!ind.evaluated_correct()) continue;
        if (!state_.best_so_far ||
            fitness_key(ind, state_.verdict) < fitness_key(*state_.best_so_far, state_.verdict)) {
            state_.best_so_far = ind;
        }
        const bool already = std::any_of(state_.epoch_best.begin(), state_.epoch_best.end(),
                                         [&](const Individual& e) { return e.id == ind.id; });
        if (!already) state_.epoch_best.push_back(ind);
    }
    std::sort(state_.epoch_best.begin(), state_.epoch_best.end(),
              [&](const Individual& a, const Individual& b) {
                  return fitness_key(a, state_.verdict) < fitness_key(b, state_.verdict);
              });
    if (state_.epoch_best.size() > static_cast<std::size_t>(state_.config.epoch_top_k))
        state_.epoch_best.resize(static_cast<std::size_t>(state_.config.epoch_top_k));
}

Result<Unit, EngineError> SceEngine::run_generation() {
    const int g = state_.generation + 1;
    const int nk = state_.config.nk_list[static_cast<std::size_t>(g - 1)];
    const int ns = state_.config.ns_list[static_cast<std::size_t>(g)];

    // Snapshot pre-optimization kernels for the archive.
    std::map<std::string, ArchiveSource> sources;
    for (const auto& ind : state_.population.individuals) {
        ArchiveSource src;
        src.initial_kernel = ind.kernel;
        if (auto it = state_.parent_metrics.find(ind.id); it != state_.parent_metrics.end())
            src.metrics_before = it->second;
        sources[ind.id] = src;
    }

    // Pre-allocate aligned-strategy ids so the parallel phase stays
    // replay-deterministic.
    const std::size_t count = state_.population.individuals.size();
    IdGen ids(state_.next_id);
    std::vector<std::string> aligned_ids;
    aligned_ids.reserve(count);
    for (std::size_t i = 0; i < count; ++i) aligned_ids.push_back(ids.alloc());
    state_.next_id = ids.peek();

    std::vector<Individual> optimized(count);
    bounded_parallel_for(static_cast<int>(count), options_.permits, [&](int i) {
        optimized[static_cast<std::size_t>(i)] = optimize_individual(
            state_.population.individuals[static_cast<std::size_t>(i)],
            aligned_ids[static_cast<std::size_t>(i)]);
    });
    state_.population.individuals = std::move(optimized);

    update_best_trackers();

    GenerationRecord record;
    record.epoch = state_.epoch;
    record.generation = g;
    record.population_size = static_cast<int>(count);
    const Individual* generation_best = nullptr;
    for (const auto& ind : state_.population.individuals) {
        EvaluatedEntry entry;
        entry.id = ind.id;
        entry.correct = ind.evaluated_correct();
        if (entry.correct) entry.latency_ms = ind.metrics->avg_latency_ms;
        for (const auto& tag : extract_tags(ind.kernel)) entry.tags.push_back(tag.to_string());
        entry.strategy_id = ind.strategy.id;
        entry.parent_kernel_id = ind.lineage.parent_kernel_id;
        entry.parent_strategy_id = ind.lineage.parent_strategy_id;
        record.entries.push_back(std::move(entry));
        state_.telemetry["individuals_evaluated"]++;
        if (!generation_best ||
            fitness_key(ind, state_.verdict) < fitness_key(*generation_best, state_.verdict))
            generation_best = &ind;
    }
    if (generation_best && generation_best->evaluated_correct()) {
        record.best_id = generation_best->id;
        record.best_latency_ms = generation_best->metrics->avg_latency_ms;
    }
    if (state_.best_so_far && state_.best_so_far->metrics)
        record.best_so_far_latency_ms = state_.best_so_far->metrics->avg_latency_ms;
    state_.generation_records.push_back(std::move(record));

    auto archived = pool_.archive_top(state_.population, options_.archive_top_n, state_.verdict,
                                      sources);
    if (!archived) {
        return EngineError{EngineError::Kind::Persistence,
                           "pool archive failed: " + archived.error().message};
    }
    state_.telemetry["pool_records_appended"] +=
        static_cast<std::int64_t>(archived.value().size());

    auto rng = rng_from_state();
    auto selection = tournament_elitism(state_.population, nk, ns, state_.verdict, rng,
                                        state_.config.tournament_size, state_.config.elite_count);
    store_rng(rng);

    SelectionResult donors;
    if (!selection) {
        // Re-seed from the best individual seen so far; give up when that has
        // already been tried for the previous generation as well.
        state_.telemetry["selection_reseeds"]++;
        state_.telemetry["consecutive_reseeds"]++;
        if (!state_.best_so_far) return selection.error();
        if (state_.telemetry["consecutive_reseeds"] > 1) {
            return EngineError{EngineError::Kind::Selection,
                               "selection failed twice in a row with no usable best individual"};
        }
        const Individual& best = *state_.best_so_far;
        donors.kernels.assign(static_cast<std::size_t>(nk),
                              KernelDonor{best.kernel, best.id, best.metrics});
        donors.strategies.assign(static_cast<std::size_t>(ns), best.strategy);
    } else {
        state_.telemetry["consecutive_reseeds"] = 0;
        donors = std::move(selection.value());
    }

    IdGen child_ids(state_.next_id);
    Population next =
        crossover_pairing(donors.kernels, donors.strategies, state_.epoch, g, child_ids);
    state_.next_id = child_ids.peek();

    state_.parent_metrics.clear();
    std::map<std::string, std::optional<PerfMetrics>> donor_metrics;
    for (const auto& donor : donors.kernels)
        donor_metrics[donor.donor_individual_id] = donor.donor_metrics;
    for (const auto& child : next.individuals) {
        if (!child.lineage.parent_kernel_id) continue;
        auto it = donor_metrics.find(*child.lineage.parent_kernel_id);
        if (it != donor_metrics.end() && it->second) state_.parent_metrics[child.id] = *it->second;
    }

    state_.population = std::move(next);
    state_.generation = g;
    state_.population_sizes.push_back(static_cast<int>(state_.population.individuals.size()));

    write_checkpoint();
    return Unit{};
}

Result<Unit, EngineError> SceEngine::finish_epoch() {
    std::vector<std::string> top_ids;
    for (const auto& ind : state_.epoch_best) top_ids.push_back(ind.id);
    state_.epoch_top_ids.push_back(std::move(top_ids));
    return Unit{};
}

void SceEngine::write_checkpoint() {
    if (provider_for_state_) {
        const json snapshot = provider_for_state_->state_snapshot();
        state_.provider_state = snapshot.is_null() ? "" : snapshot.dump();
    }
    if (options_.checkpoint_dir.empty()) return;

    json doc;
    doc["generated_at"] = []() {
        const auto now = std::chrono::system_clock::now();
        const std::time_t t = std::chrono::system_clock::to_time_t(now);
        char buffer[32];
        std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
        return std::string(buffer);
    }();
    if (!options_.checkpoint_context.empty()) {
        json context = json::parse(options_.checkpoint_context, nullptr, false);
        if (!context.is_discarded()) doc["manifest"] = std::move(context);
    }
    doc["state"] = to_json(state_);

    std::filesystem::create_directories(options_.checkpoint_dir);
    const std::string path = options_.checkpoint_dir + "/ckpt_e" + std::to_string(state_.epoch) +
                             "_g" + std::to_string(state_.generation) + ".json";
    std::ofstream out(path, std::ios::trunc);
    out << doc.dump(2) << "\n";
}

Result<Individual, EngineError> SceEngine::drive() {
    int session_generations = 0;
    while (true) {
        while (state_.generation < state_.config.generations) {
            auto step = run_generation();
            if (!step) return step.error();
            ++session_generations;
            if (options_.halt_after_generations > 0 &&
                session_generations >= options_.halt_after_generations &&
                !(state_.epoch == state_.config.epochs &&
                  state_.generation == state_.config.generations)) {
                if (state_.best_so_far) return *state_.best_so_far;
                return EngineError{EngineError::Kind::Selection,
                                   "halted before any correct evaluation"};
            }
        }
        auto finished = finish_epoch();
        if (!finished) return finished.error();
        if (state_.epoch >= state_.config.epochs) break;

        // The best kernel of this epoch seeds the next one.
        KernelSource seed;
        std::optional<PerfMetrics> seed_metrics;
        if (!state_.epoch_best.empty()) {
            seed = state_.epoch_best.front().kernel;
            seed_metrics = state_.epoch_best.front().metrics;
        } else if (state_.best_so_far) {
            seed = state_.best_so_far->kernel;
            seed_metrics = state_.best_so_far->metrics;
        } else {
            return EngineError{EngineError::Kind::Selection,
                               "epoch produced no evaluated-correct individual to seed from"};
        }
        auto started = start_epoch(state_.epoch + 1, seed, seed_metrics);
        if (!started) return started.error();
    }

    if (!state_.best_so_far) {
        return EngineError{EngineError::Kind::Selection,
                           "run finished without any evaluated-correct individual"};
    }
    state_.completed = true;
    write_checkpoint();
    return *state_.best_so_far;
}

Result<Individual, EngineError> SceEngine::run(std::optional<KernelSource> k_init) {
    const auto violations = validate_config(state_.config);
    if (!violations.empty()) {
        std::string message = "invalid config:";
        for (const auto& v : violations) message += " " + v + ";";
        return EngineError{EngineError::Kind::Config, message};
    }

    std::mt19937_64 rng(state_.config.rng_seed);
    store_rng(rng);

    if (!k_init) {
        auto generated = agents_.generate_vanilla_kernel(state_.task, guidance_, backend_);
        if (!generated) {
            return EngineError{EngineError::Kind::Agent,
                               "vanilla kernel generation failed: " + generated.error().message};
        }
        k_init = generated.value();
    }

    auto started = start_epoch(1, *k_init, std::nullopt);
    if (!started) return started.error();
    return drive();
}

Result<Individual, EngineError> SceEngine::resume(RunState state) {
    state_ = std::move(state);
    const auto violations = validate_config(state_.config);
    if (!violations.empty()) {
        std::string message = "checkpoint carries an invalid config:";
        for (const auto& v : violations) message += " " + v + ";";
        return EngineError{EngineError::Kind::Config, message};
    }
    // The restored verdict is authoritative; prompting guidance must match it.
    guidance_ = guidance(state_.verdict);
    if (provider_for_state_ && !state_.provider_state.empty()) {
        json snapshot = json::parse(state_.provider_state, nullptr, false);
        if (!snapshot.is_discarded()) provider_for_state_->restore_state(snapshot);
    }
    if (state_.completed) {
        if (state_.best_so_far) return *state_.best_so_far;
        return EngineError{EngineError::Kind::Selection, "completed run has no best individual"};
    }
    return drive();
}

// ---- RunState serialization ----

namespace {

json to_json(const EvaluatedEntry& e) {
    json j{{"id", e.id}, {"correct", e.correct}, {"tags", e.tags},
           {"strategy_id", e.strategy_id}};
    if (e.latency_ms) j["latency_ms"] = *e.latency_ms;
    if (e.parent_kernel_id) j["parent_kernel_id"] = *e.parent_kernel_id;
    if (e.parent_strategy_id) j["parent_strategy_id"] = *e.parent_strategy_id;
    return j;
}

EvaluatedEntry evaluated_entry_from_json(const json& j) {
    EvaluatedEntry e;
    e.id = j.at("id").get<std::string>();
    e.correct = j.at("correct").get<bool>();
    if (j.contains("latency_ms")) e.latency_ms = j.at("latency_ms").get<double>();
    e.tags = j.at("tags").get<std::vector<std::string>>();
    e.strategy_id = j.at("strategy_id").get<std::string>();
    if (j.contains("parent_kernel_id"))
        e.parent_kernel_id = j.at("parent_kernel_id").get<std::string>();
    if (j.contains("parent_strategy_id"))
        e.parent_strategy_id = j.at("parent_strategy_id").get<std::string>();
    return e;
}

json to_json(const GenerationRecord& r) {
    json entries = json::array();
    for (const auto& e : r.entries) entries.push_back(to_json(e));
    json j{{"epoch", r.epoch},
           {"generation", r.generation},
           {"population_size", r.population_size},
           {"entries", std::move(entries)}};
    if (r.best_id) j["best_id"] = *r.best_id;
    if (r.best_latency_ms) j["best_latency_ms"] = *r.best_latency_ms;
    if (r.best_so_far_latency_ms) j["best_so_far_latency_ms"] = *r.best_so_far_latency_ms;
    return j;
}

GenerationRecord generation_record_from_json(const json& j) {
    GenerationRecord r;
    r.epoch = j.at("epoch").get<int>();
    r.generation = j.at("generation").get<int>();
    r.population_size = j.at("population_size").get<int>();
    for (const auto& e : j.at("entries")) r.entries.push_back(evaluated_entry_from_json(e));
    if (j.contains("best_id")) r.best_id = j.at("best_id").get<std::string>();
    if (j.contains("best_latency_ms")) r.best_latency_ms = j.at("best_latency_ms").get<double>();
    if (j.contains("best_so_far_latency_ms"))
        r.best_so_far_latency_ms = j.at("best_so_far_latency_ms").get<double>();
    return r;
}

} // namespace

json to_json(const RunState& state) {
    json parent_metrics = json::object();
    for (const auto& [id, metrics] : state.parent_metrics) parent_metrics[id] = to_json(metrics);

    json records = json::array();
    for (const auto& r : state.generation_records) records.push_back(to_json(r));

    json epoch_best = json::array();
    for (const auto& ind : state.epoch_best) epoch_best.push_back(to_json(ind));

    json telemetry = json::object();
    for (const auto& [key, value] : state.telemetry) telemetry[key] = value;

    json j{{"config", to_json(state.config)},
           {"task", to_json(state.task)},
           {"verdict", to_json(state.verdict)},
           {"epoch", state.epoch},
           {"generation", state.generation},
           {"population", to_json(state.population)},
           {"epoch_best", std::move(epoch_best)},
           {"epoch_seed_kernel", to_json(state.epoch_seed_kernel)},
           {"parent_metrics", std::move(parent_metrics)},
           {"rng_state", state.rng_state},
           {"next_id", state.next_id},
           {"telemetry", std::move(telemetry)},
           {"generation_records", std::move(records)},
           {"population_sizes", state.population_sizes},
           {"epoch_top_ids", state.epoch_top_ids},
           {"completed", state.completed}};
    if (state.best_so_far) j["best_so_far"] = to_json(*state.best_so_far);
    if (state.epoch_seed_metrics) j["epoch_seed_metrics"] = to_json(*state.epoch_seed_metrics);
    if (!state.provider_state.empty())
        j["provider_state"] = json::parse(state.provider_state, nullptr, false);
    return j;
}

RunState run_state_from_json(const json& j) {
    RunState state;
    state.config = evolution_config_from_json(j.at("config"));
    state.task = task_definition_from_json(j.at("task"));
    state.verdict = roofline_verdict_from_json(j.at("verdict"));
    state.epoch = j.at("epoch").get<int>();
    state.generation = j.at("generation").get<int>();
    state.population = population_from_json(j.at("population"));
    if (j.contains("best_so_far")) state.best_so_far = individual_from_json(j.at("best_so_far"));
    for (const auto& e : j.at("epoch_best")) state.epoch_best.push_back(individual_from_json(e));
    state.epoch_seed_kernel = kernel_source_from_json(j.at("epoch_seed_kernel"));
    if (j.contains("epoch_seed_metrics"))
        state.epoch_seed_metrics = perf_metrics_from_json(j.at("epoch_seed_metrics"));
    for (const auto& [id, metrics] : j.at("parent_metrics").items())
        state.parent_metrics[id] = perf_metrics_from_json(metrics);
    state.rng_state = j.at("rng_state").get<std::string>();
    state.next_id = j.at("next_id").get<std::uint64_t>();
    for (const auto& [key, value] : j.at("telemetry").items())
        state.telemetry[key] = value.get<std::int64_t>();
    for (const auto& r : j.at("generation_records"))
        state.generation_records.push_back(generation_record_from_json(r));
    state.population_sizes = j.at("population_sizes").get<std::vector<int>>();
    state.epoch_top_ids = j.at("epoch_top_ids").get<std::vector<std::vector<std::string>>>();
    if (j.contains("provider_state")) state.provider_state = j.at("provider_state").dump();
    state.completed = j.at("completed").get<bool>();
    return state;
}

} // namespace kevo
