#include "kevo/strategy_pool.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace kevo {

using nlohmann::json;

json to_json(const PoolRecord& r) {
    json j{{"record_id", r.record_id},
           {"initial_kernel", to_json(r.initial_kernel)},
           {"strategy", to_json(r.strategy)},
           {"optimized_kernel", to_json(r.optimized_kernel)},
           {"metrics_after", to_json(r.metrics_after)},
           {"epoch", r.epoch},
           {"generation", r.generation}};
    if (r.metrics_before) j["metrics_before"] = to_json(*r.metrics_before);
    return j;
}

PoolRecord pool_record_from_json(const json& j) {
    PoolRecord r;
    r.record_id = j.at("record_id").get<std::string>();
    r.initial_kernel = kernel_source_from_json(j.at("initial_kernel"));
    r.strategy = strategy_from_json(j.at("strategy"));
    r.optimized_kernel = kernel_source_from_json(j.at("optimized_kernel"));
    if (j.contains("metrics_before")) r.metrics_before = perf_metrics_from_json(j.at("metrics_before"));
    r.metrics_after = perf_metrics_from_json(j.at("metrics_after"));
    r.epoch = j.at("epoch").get<int>();
    r.generation = j.at("generation").get<int>();
    return r;
}

EmbeddingVector embed(const std::string& text) {
    EmbeddingVector counts;
    std::string token;
    auto flush = [&] {
        if (!token.empty()) {
            counts[token] += 1.0;
            token.clear();
        }
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            token.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();

    double norm_sq = 0.0;
    for (const auto& [_, weight] : counts) norm_sq += weight * weight;
    if (norm_sq > 0.0) {
        const double norm = std::sqrt(norm_sq);
        for (auto& [_, weight] : counts) weight /= norm;
    }
    return counts;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    const EmbeddingVector& small = a.size() <= b.size() ? a : b;
    const EmbeddingVector& large = a.size() <= b.size() ? b : a;
    double dot = 0.0;
    for (const auto& [token, weight] : small) {
        auto it = large.find(token);
        if (it != large.end()) dot += weight * it->second;
    }
    return dot; // inputs are unit vectors (or zero)
}

Result<StrategyPool, PoolError> StrategyPool::open(const std::string& path) {
    StrategyPool pool;
    pool.backing_path_ = path;
    std::ifstream in(path);
    if (!in.is_open()) return pool; // fresh store
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            return PoolError{PoolError::Kind::Format,
                             "pool file " + path + ": invalid JSON", line_no};
        }
        try {
            PoolRecord record = pool_record_from_json(j);
            pool.record_embeddings_.push_back(embed(record.initial_kernel.source_text));
            pool.records_.push_back(std::move(record));
        } catch (const std::exception& e) {
            return PoolError{PoolError::Kind::Format,
                             "pool file " + path + ": " + e.what(), line_no};
        }
    }
    return pool;
}

std::vector<std::pair<PoolRecord, double>> StrategyPool::retrieve(const KernelSource& query,
                                                                  int k) const {
    std::vector<std::pair<PoolRecord, double>> out;
    if (k < 1 || records_.empty()) return out;
    const EmbeddingVector q = embed(query.source_text);

    std::vector<std::size_t> order(records_.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> sims(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i)
        sims[i] = cosine_similarity(q, record_embeddings_[i]);

    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sims[a] > sims[b]; });

    for (std::size_t idx : order) {
        if (static_cast<int>(out.size()) >= k) break;
        if (sims[idx] <= 0.0) break; // zero-similarity records excluded
        out.emplace_back(records_[idx], sims[idx]);
    }
    return out;
}

std::vector<Strategy> StrategyPool::retrieve_strategies(const KernelSource& query, int k) const {
    std::vector<Strategy> out;
    if (k < 1) return out;
    for (const auto& [record, sim] : retrieve(query, k)) {
        Strategy s = record.strategy;
        s.origin = StrategyOrigin::Retrieved;
        out.push_back(std::move(s));
    }
    for (const auto& ext : external_) {
        if (static_cast<int>(out.size()) >= k) break;
        out.push_back(ext);
    }
    return out;
}

Result<std::vector<std::string>, PoolError> StrategyPool::archive_top(
    const Population& pop, int n, const RooflineVerdict& verdict,
    const std::map<std::string, ArchiveSource>& sources) {
    std::vector<const Individual*> ranked;
    for (const auto& ind : pop.individuals)
        if (ind.evaluated_correct()) ranked.push_back(&ind);
    std::sort(ranked.begin(), ranked.end(), [&](const Individual* a, const Individual* b) {
        return fitness_key(*a, verdict) < fitness_key(*b, verdict);
    });
    if (static_cast<int>(ranked.size()) > n) ranked.resize(static_cast<std::size_t>(n));

    std::vector<std::string> appended;
    for (const Individual* ind : ranked) {
        PoolRecord record;
        record.record_id = "e" + std::to_string(pop.epoch) + "_g" + std::to_string(pop.generation) +
                           "_i" + ind->id;
        const bool exists = std::any_of(records_.begin(), records_.end(), [&](const PoolRecord& r) {
            return r.record_id == record.record_id;
        });
        if (exists) continue;

        auto src = sources.find(ind->id);
        if (src != sources.end()) {
            record.initial_kernel = src->second.initial_kernel;
            record.metrics_before = src->second.metrics_before;
        } else {
            record.initial_kernel = ind->kernel;
        }
        record.strategy = ind->strategy;
        record.optimized_kernel = ind->kernel;
        record.metrics_after = *ind->metrics;
        record.epoch = pop.epoch;
        record.generation = pop.generation;

        auto persisted = append_record(record);
        if (!persisted) return persisted.error();
        appended.push_back(record.record_id);
    }
    return appended;
}

Result<Unit, PoolError> StrategyPool::append_record(const PoolRecord& record) {
    if (!backing_path_.empty()) {
        std::ofstream out(backing_path_, std::ios::app);
        if (!out.is_open()) {
            return PoolError{PoolError::Kind::Persistence,
                             "cannot open pool file for append: " + backing_path_, 0};
        }
        out << to_json(record).dump() << "\n";
        if (!out.good()) {
            return PoolError{PoolError::Kind::Persistence,
                             "write failed for pool file: " + backing_path_, 0};
        }
    }
    record_embeddings_.push_back(embed(record.initial_kernel.source_text));
    records_.push_back(record);
    return Unit{};
}

Result<int, PoolError> StrategyPool::seed_external(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open())
        return PoolError{PoolError::Kind::Persistence, "cannot open file: " + path, 0};
    std::vector<Strategy> imported;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            return PoolError{PoolError::Kind::Format, path + ": invalid JSON", line_no};
        try {
            Strategy s = strategy_from_json(j);
            s.origin = StrategyOrigin::ExternalPool;
            imported.push_back(std::move(s));
        } catch (const std::exception& e) {
            return PoolError{PoolError::Kind::Format, path + ": " + e.what(), line_no};
        }
    }
    external_.insert(external_.end(), imported.begin(), imported.end());
    return static_cast<int>(imported.size());
}

Result<int, PoolError> StrategyPool::import_records(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open())
        return PoolError{PoolError::Kind::Persistence, "cannot open file: " + path, 0};
    std::string line;
    int line_no = 0;
    int imported = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            return PoolError{PoolError::Kind::Format, path + ": invalid JSON", line_no};
        try {
            PoolRecord record = pool_record_from_json(j);
            auto persisted = append_record(record);
            if (!persisted) return persisted.error();
            ++imported;
        } catch (const std::exception& e) {
            return PoolError{PoolError::Kind::Format, path + ": " + e.what(), line_no};
        }
    }
    return imported;
}

Result<Unit, PoolError> StrategyPool::export_records(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out.is_open())
        return PoolError{PoolError::Kind::Persistence, "cannot open file for write: " + path, 0};
    for (const auto& record : records_) out << to_json(record).dump() << "\n";
    if (!out.good())
        return PoolError{PoolError::Kind::Persistence, "write failed: " + path, 0};
    return Unit{};
}

std::vector<PoolRecord> StrategyPool::recent_records(int n) const {
    std::vector<PoolRecord> out;
    if (n < 1) return out;
    const std::size_t count = std::min<std::size_t>(records_.size(), static_cast<std::size_t>(n));
    out.assign(records_.end() - static_cast<std::ptrdiff_t>(count), records_.end());
    return out;
}

} // namespace kevo
