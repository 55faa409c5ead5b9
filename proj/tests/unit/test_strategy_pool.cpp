#include <doctest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "kevo/strategy_pool.hpp"
#include "support/test_support.hpp"

using namespace kevo;

namespace {

// Independent similarity oracle: recount tokens and compute the cosine from
// scratch, without touching the library's embedding code.
std::map<std::string, int> oracle_counts(const std::string& text) {
    std::map<std::string, int> counts;
    std::string token;
    auto flush = [&] {
        if (!token.empty()) counts[token]++;
        token.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) token.push_back(static_cast<char>(std::tolower(c)));
        else flush();
    }
    flush();
    return counts;
}

double oracle_cosine(const std::string& a, const std::string& b) {
    const auto ca = oracle_counts(a);
    const auto cb = oracle_counts(b);
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [t, n] : ca) na += double(n) * n;
    for (const auto& [t, n] : cb) nb += double(n) * n;
    for (const auto& [t, n] : ca) {
        auto it = cb.find(t);
        if (it != cb.end()) dot += double(n) * it->second;
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

PoolRecord make_record(const std::string& id, const std::string& initial_text,
                       double latency_after) {
    PoolRecord r;
    r.record_id = id;
    r.initial_kernel = {"task", initial_text, "desc"};
    r.strategy = {"s" + id, "title " + id, "body " + id, {StrategyTag::parse("Tiling")},
                  StrategyOrigin::Generated};
    r.optimized_kernel = {"task", initial_text + "\n// optimized", "desc"};
    r.metrics_after.correct = true;
    r.metrics_after.avg_latency_ms = latency_after;
    r.epoch = 1;
    r.generation = 0;
    return r;
}

std::string random_kernel_text(std::mt19937_64& rng) {
    static const std::vector<std::string> vocab = {"load", "store", "tile", "warp", "sync",
                                                   "mma",  "float", "shared", "idx", "loop"};
    std::uniform_int_distribution<int> len(1, 12);
    std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
    std::string text;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) text += vocab[pick(rng)] + " ";
    return text;
}

} // namespace

TEST_CASE("embed tokenizes, lowercases, and L2-normalizes") {
    const auto v = embed("add add mul");
    REQUIRE(v.size() == 2);
    CHECK(v.at("add") == doctest::Approx(2.0 / std::sqrt(5.0)));
    CHECK(v.at("mul") == doctest::Approx(1.0 / std::sqrt(5.0)));

    double norm_sq = 0.0;
    for (const auto& [_, w] : v) norm_sq += w * w;
    CHECK(norm_sq == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("embed of empty text is the zero vector, and embed is deterministic") {
    CHECK(embed("").empty());
    CHECK(embed(";;; \n\t") .empty());
    const std::string text = "__global__ void k(float* a) { a[0] = 1.0f; }";
    CHECK(embed(text) == embed(text));
}

TEST_CASE("retrieve finds the query kernel itself with similarity 1") {
    test::TempDir dir("pool_self");
    const auto rec = make_record("r1", "tile load store sync", 5.0);
    test::write_text_file(dir.join("in.jsonl"), to_json(rec).dump() + "\n");
    auto pool2 = StrategyPool();
    REQUIRE(pool2.import_records(dir.join("in.jsonl")).ok());

    const auto hits = pool2.retrieve(rec.initial_kernel, 3);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].first.record_id == "r1");
    CHECK(hits[0].second == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("retrieve on an empty store returns nothing") {
    StrategyPool pool;
    CHECK(pool.retrieve({"t", "some kernel text", "d"}, 5).empty());
}

TEST_CASE("retrieve equals brute-force cosine ranking with tie handling") {
    std::mt19937_64 rng(2024);
    StrategyPool pool;
    std::vector<PoolRecord> records;
    test::TempDir dir("pool_oracle");
    std::string lines;
    for (int i = 0; i < 200; ++i) {
        auto rec = make_record("r" + std::to_string(i), random_kernel_text(rng), 1.0 + i);
        records.push_back(rec);
        lines += to_json(rec).dump() + "\n";
    }
    test::write_text_file(dir.join("store.jsonl"), lines);
    REQUIRE(pool.import_records(dir.join("store.jsonl")).ok());

    const KernelSource query{"q", random_kernel_text(rng), "d"};
    for (const int k : {1, 3, 10, 50}) {
        // Brute-force oracle: rank every record by the independent cosine,
        // stable on insertion order, drop zero similarity, truncate to k.
        // Mathematically tied scores reach the two implementations along
        // different float paths, so ranks are compared by score (1e-12), not
        // by id.
        std::vector<std::pair<double, std::size_t>> scored;
        for (std::size_t i = 0; i < records.size(); ++i)
            scored.emplace_back(oracle_cosine(query.source_text,
                                              records[i].initial_kernel.source_text),
                                i);
        std::stable_sort(scored.begin(), scored.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        std::vector<double> expected_scores;
        for (const auto& [sim, idx] : scored) {
            if (sim <= 0.0) continue;
            if (static_cast<int>(expected_scores.size()) >= k) break;
            expected_scores.push_back(sim);
        }

        const auto hits = pool.retrieve(query, k);
        REQUIRE(hits.size() == expected_scores.size());
        for (std::size_t i = 0; i < hits.size(); ++i) {
            const double oracle_score =
                oracle_cosine(query.source_text, hits[i].first.initial_kernel.source_text);
            // Reported similarity agrees with the oracle's value for that record.
            CHECK(hits[i].second == doctest::Approx(oracle_score).epsilon(1e-12));
            // The i-th returned record scores exactly what the oracle expects
            // at rank i.
            CHECK(oracle_score == doctest::Approx(expected_scores[i]).epsilon(1e-12));
            CHECK(hits[i].second > 0.0);
            if (i > 0) CHECK(hits[i - 1].second >= hits[i].second);
        }
    }
}

TEST_CASE("retrieve breaks exact similarity ties by insertion order") {
    // Scaled token multisets embed to bitwise-identical unit vectors, so the
    // similarities tie exactly and insertion order must decide.
    StrategyPool pool;
    test::TempDir dir("pool_ties");
    std::string lines;
    lines += to_json(make_record("first", "tile warp tile warp", 1.0)).dump() + "\n";
    lines += to_json(make_record("second", "tile warp", 2.0)).dump() + "\n";
    lines += to_json(make_record("third", "tile tile warp warp", 3.0)).dump() + "\n";
    lines += to_json(make_record("unrelated", "mma sync", 4.0)).dump() + "\n";
    test::write_text_file(dir.join("store.jsonl"), lines);
    REQUIRE(pool.import_records(dir.join("store.jsonl")).ok());

    const auto hits = pool.retrieve({"q", "tile warp loop", "d"}, 4);
    REQUIRE(hits.size() == 3); // the unrelated record has zero similarity
    CHECK(hits[0].first.record_id == "first");
    CHECK(hits[1].first.record_id == "second");
    CHECK(hits[2].first.record_id == "third");
    CHECK(hits[0].second == hits[1].second);
    CHECK(hits[1].second == hits[2].second);
}

namespace {

RooflineVerdict toy_verdict() {
    GpuSpec spec{"toy", 1e12, {{"u", 1e13}}};
    return classify(spec, 100.0);
}

Population evaluated_population() {
    Population pop;
    pop.epoch = 1;
    pop.generation = 2;
    const double latencies[] = {5.0, 2.0, 9.0, 3.0, 7.0};
    for (int i = 0; i < 5; ++i) {
        Individual ind;
        ind.id = std::to_string(i + 1);
        ind.kernel = {"task", "kernel " + std::to_string(i), "d"};
        ind.strategy = {"s" + std::to_string(i), "t", "body " + std::to_string(i), {},
                        StrategyOrigin::Aligned};
        PerfMetrics m;
        m.correct = true;
        m.avg_latency_ms = latencies[i];
        ind.metrics = m;
        pop.individuals.push_back(std::move(ind));
    }
    return pop;
}

} // namespace

TEST_CASE("archive_top stores the n best and is idempotent") {
    StrategyPool pool;
    const auto pop = evaluated_population();
    std::map<std::string, ArchiveSource> sources;
    for (const auto& ind : pop.individuals)
        sources[ind.id] = ArchiveSource{{"task", "pre " + ind.id, "d"}, std::nullopt};

    auto appended = pool.archive_top(pop, 2, toy_verdict(), sources);
    REQUIRE(appended.ok());
    REQUIRE(appended.value().size() == 2);
    // The two lowest-latency individuals are ids 2 (2.0) and 4 (3.0).
    CHECK(appended.value()[0] == "e1_g2_i2");
    CHECK(appended.value()[1] == "e1_g2_i4");
    CHECK(pool.records()[0].initial_kernel.source_text == "pre 2");
    CHECK(pool.records()[0].optimized_kernel.source_text == "kernel 1");
    CHECK_FALSE(pool.records()[0].metrics_before.has_value());

    auto again = pool.archive_top(pop, 2, toy_verdict(), sources);
    REQUIRE(again.ok());
    CHECK(again.value().empty());
    CHECK(pool.records().size() == 2);
}

TEST_CASE("archive_top never archives incorrect individuals") {
    StrategyPool pool;
    auto pop = evaluated_population();
    for (std::size_t i = 0; i < pop.individuals.size(); ++i) {
        if (i == 1) continue; // keep one correct
        pop.individuals[i].metrics->correct = false;
        pop.individuals[i].metrics->avg_latency_ms.reset();
    }
    auto appended = pool.archive_top(pop, 2, toy_verdict(), {});
    REQUIRE(appended.ok());
    CHECK(appended.value().size() == 1);
    CHECK(appended.value()[0] == "e1_g2_i2");
}

TEST_CASE("seed_external imports strategies and reports counts") {
    StrategyPool pool;
    auto imported = pool.seed_external(test::fixture_path("external_strategies.jsonl"));
    REQUIRE(imported.ok());
    CHECK(imported.value() == 3);
    REQUIRE(pool.external_strategies().size() == 3);
    CHECK(pool.external_strategies()[0].origin == StrategyOrigin::ExternalPool);
}

TEST_CASE("seed_external of an empty file imports zero") {
    test::TempDir dir("pool_empty");
    test::write_text_file(dir.join("empty.jsonl"), "");
    StrategyPool pool;
    auto imported = pool.seed_external(dir.join("empty.jsonl"));
    REQUIRE(imported.ok());
    CHECK(imported.value() == 0);
}

TEST_CASE("seed_external names the malformed line") {
    test::TempDir dir("pool_badline");
    Strategy good{"x1", "t", "valid body", {}, StrategyOrigin::ExternalPool};
    test::write_text_file(dir.join("bad.jsonl"),
                          to_json(good).dump() + "\nnot json at all\n");
    StrategyPool pool;
    auto imported = pool.seed_external(dir.join("bad.jsonl"));
    REQUIRE_FALSE(imported.ok());
    CHECK(imported.error().kind == PoolError::Kind::Format);
    CHECK(imported.error().line == 2);
    // Nothing from the bad file is kept.
    CHECK(pool.external_strategies().empty());
}

TEST_CASE("external strategies fill retrieve_strategies after record hits") {
    StrategyPool pool;
    REQUIRE(pool.seed_external(test::fixture_path("external_strategies.jsonl")).ok());
    test::TempDir dir("pool_mix");
    const auto rec = make_record("r1", "tile load store", 4.0);
    test::write_text_file(dir.join("in.jsonl"), to_json(rec).dump() + "\n");
    REQUIRE(pool.import_records(dir.join("in.jsonl")).ok());

    const auto strategies = pool.retrieve_strategies({"q", "tile load store", "d"}, 3);
    REQUIRE(strategies.size() == 3);
    CHECK(strategies[0].origin == StrategyOrigin::Retrieved);
    CHECK(strategies[0].body == rec.strategy.body);
    CHECK(strategies[1].origin == StrategyOrigin::ExternalPool);
}

TEST_CASE("export then import yields an equivalent store") {
    test::TempDir dir("pool_roundtrip");
    StrategyPool pool;
    std::string lines;
    std::mt19937_64 rng(7);
    for (int i = 0; i < 12; ++i)
        lines += to_json(make_record("r" + std::to_string(i), random_kernel_text(rng), i + 1.0))
                     .dump() +
                 "\n";
    test::write_text_file(dir.join("in.jsonl"), lines);
    REQUIRE(pool.import_records(dir.join("in.jsonl")).ok());

    REQUIRE(pool.export_records(dir.join("out.jsonl")).ok());
    StrategyPool reloaded;
    REQUIRE(reloaded.import_records(dir.join("out.jsonl")).ok());
    REQUIRE(reloaded.records().size() == pool.records().size());
    for (std::size_t i = 0; i < pool.records().size(); ++i)
        CHECK(reloaded.records()[i] == pool.records()[i]);
}

TEST_CASE("the store is append-only: existing records never change") {
    StrategyPool pool;
    REQUIRE(pool.archive_top(evaluated_population(), 2, toy_verdict(), {}).ok());
    const auto before = pool.records();

    Population later = evaluated_population();
    later.generation = 3;
    REQUIRE(pool.archive_top(later, 2, toy_verdict(), {}).ok());
    REQUIRE(pool.seed_external(test::fixture_path("external_strategies.jsonl")).ok());

    REQUIRE(pool.records().size() == before.size() + 2);
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(pool.records()[i] == before[i]);
}

TEST_CASE("open appends to a backing file across instances") {
    test::TempDir dir("pool_backing");
    const std::string path = dir.join("store.jsonl");
    {
        auto pool = StrategyPool::open(path);
        REQUIRE(pool.ok());
        auto appended =
            pool.value().archive_top(evaluated_population(), 1, toy_verdict(), {});
        REQUIRE(appended.ok());
        REQUIRE(appended.value().size() == 1);
    }
    auto reopened = StrategyPool::open(path);
    REQUIRE(reopened.ok());
    REQUIRE(reopened.value().records().size() == 1);
    CHECK(reopened.value().records()[0].record_id == "e1_g2_i2");
}

TEST_CASE("PoolRecord JSON round-trips") {
    auto rec = make_record("rt", "tile warp sync", 3.25);
    PerfMetrics before;
    before.correct = true;
    before.avg_latency_ms = 10.0;
    rec.metrics_before = before;
    const auto j = to_json(rec);
    CHECK(pool_record_from_json(j) == rec);
    CHECK(to_json(pool_record_from_json(j)).dump() == j.dump());
}
