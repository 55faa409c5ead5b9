#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kevo/domain.hpp"
#include "kevo/result.hpp"
#include "kevo/roofline.hpp"

namespace kevo {

/// One archived optimization: the kernel a generation started from, the
/// strategy applied, the kernel it produced, and the measurements around it.
struct PoolRecord {
    std::string record_id;
    KernelSource initial_kernel;
    Strategy strategy;
    KernelSource optimized_kernel;
    std::optional<PerfMetrics> metrics_before;
    PerfMetrics metrics_after;
    int epoch = 1;
    int generation = 0;

    bool operator==(const PoolRecord&) const = default;
};

nlohmann::json to_json(const PoolRecord&);
PoolRecord pool_record_from_json(const nlohmann::json&);

/// Sparse bag-of-words vector, L2-normalized unless empty.
using EmbeddingVector = std::map<std::string, double>;

/// Tokenizes on non-alphanumeric boundaries, lowercases, counts term
/// frequencies, L2-normalizes. Deterministic; empty text yields the zero
/// vector.
EmbeddingVector embed(const std::string& text);

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

struct PoolError {
    enum class Kind { Format, Persistence };
    Kind kind = Kind::Format;
    std::string message;
    int line = 0; // 1-based line number for format errors
};

/// Inputs archive_top needs beyond the population itself: what each
/// individual's kernel looked like before this generation optimized it.
struct ArchiveSource {
    KernelSource initial_kernel;
    std::optional<PerfMetrics> metrics_before;
};

/// Append-only store of optimization history with similarity retrieval.
/// Backed by a JSONL file when opened with a path; in-memory otherwise.
/// Single writer, concurrent readers against a stable snapshot.
class StrategyPool {
public:
    StrategyPool() = default;

    /// Loads an existing JSONL store (missing file = empty store) and appends
    /// to it afterwards.
    static Result<StrategyPool, PoolError> open(const std::string& path);

    /// Records ranked by cosine similarity between the query kernel text and
    /// each record's initial kernel text, descending; ties broken by insertion
    /// order (older first); zero-similarity records excluded.
    std::vector<std::pair<PoolRecord, double>> retrieve(const KernelSource& query, int k) const;

    /// Strategies for a generation prompt: strategies of the top-similarity
    /// records first, then external-pool strategies to fill up to k.
    std::vector<Strategy> retrieve_strategies(const KernelSource& query, int k) const;

    /// Archives the n best individuals of pop by fitness_key. Idempotent per
    /// (epoch, generation, individual id); incorrect individuals are never
    /// archived. Returns the record ids actually appended.
    Result<std::vector<std::string>, PoolError> archive_top(
        const Population& pop, int n, const RooflineVerdict& verdict,
        const std::map<std::string, ArchiveSource>& sources);

    /// Imports strategy-only records (JSONL of Strategy). Returns the count
    /// imported; a malformed line fails with its 1-based line number.
    Result<int, PoolError> seed_external(const std::string& path);

    /// Imports full PoolRecord JSONL (the `export_records` format).
    Result<int, PoolError> import_records(const std::string& path);

    Result<Unit, PoolError> export_records(const std::string& path) const;

    /// Most recently archived records, oldest first, up to n.
    std::vector<PoolRecord> recent_records(int n) const;

    const std::vector<PoolRecord>& records() const { return records_; }
    const std::vector<Strategy>& external_strategies() const { return external_; }

private:
    Result<Unit, PoolError> append_record(const PoolRecord& record);

    std::vector<PoolRecord> records_;
    std::vector<EmbeddingVector> record_embeddings_;
    std::vector<Strategy> external_;
    std::string backing_path_;
};

} // namespace kevo
