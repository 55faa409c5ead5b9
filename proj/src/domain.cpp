#include "kevo/domain.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace kevo {

namespace {

struct TagName {
    StrategyTag::Kind kind;
    const char* name;
};

constexpr std::array<TagName, 9> kCanonicalTags = {{
    {StrategyTag::Kind::TensorCore, "TensorCore"},
    {StrategyTag::Kind::Tiling, "Tiling"},
    {StrategyTag::Kind::VectorizedAccess, "VectorizedAccess"},
    {StrategyTag::Kind::MemoryPadding, "MemoryPadding"},
    {StrategyTag::Kind::Swizzle, "Swizzle"},
    {StrategyTag::Kind::DoubleBuffering, "DoubleBuffering"},
    {StrategyTag::Kind::MultiStagePipeline, "MultiStagePipeline"},
    {StrategyTag::Kind::AsyncCopy, "AsyncCopy"},
    {StrategyTag::Kind::PtxLevel, "PtxLevel"},
}};

std::string trim(const std::string& text) {
    auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

std::string lower(std::string text) {
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return text;
}

} // namespace

StrategyTag StrategyTag::other(std::string name) {
    StrategyTag tag;
    tag.kind_ = Kind::Other;
    tag.other_name_ = std::move(name);
    return tag;
}

StrategyTag StrategyTag::parse(const std::string& name) {
    const std::string trimmed = trim(name);
    const std::string folded = lower(trimmed);
    for (const auto& entry : kCanonicalTags) {
        if (folded == lower(entry.name)) return StrategyTag(entry.kind);
    }
    return StrategyTag::other(trimmed);
}

std::string StrategyTag::to_string() const {
    if (kind_ == Kind::Other) return other_name_;
    for (const auto& entry : kCanonicalTags) {
        if (entry.kind == kind_) return entry.name;
    }
    return "";
}

std::string to_string(StrategyOrigin origin) {
    switch (origin) {
        case StrategyOrigin::Generated: return "Generated";
        case StrategyOrigin::Retrieved: return "Retrieved";
        case StrategyOrigin::Aligned: return "Aligned";
        case StrategyOrigin::ExternalPool: return "ExternalPool";
    }
    return "Generated";
}

StrategyOrigin strategy_origin_from_string(const std::string& text) {
    if (text == "Generated") return StrategyOrigin::Generated;
    if (text == "Retrieved") return StrategyOrigin::Retrieved;
    if (text == "Aligned") return StrategyOrigin::Aligned;
    if (text == "ExternalPool") return StrategyOrigin::ExternalPool;
    throw std::invalid_argument("unknown strategy origin: " + text);
}

std::string normalized_strategy_body(const std::string& body) {
    std::string out;
    out.reserve(body.size());
    bool in_space = true;
    for (unsigned char c : body) {
        if (std::isspace(c)) {
            if (!in_space && !out.empty()) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(static_cast<char>(std::tolower(c)));
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::vector<std::string> validate_config(const EvolutionConfig& cfg) {
    std::vector<std::string> violations;
    auto fail = [&](std::string msg) { violations.push_back(std::move(msg)); };

    if (cfg.epochs < 1) fail("epochs >= 1");
    if (cfg.generations < 1) fail("generations >= 1");
    const auto g = static_cast<std::size_t>(std::max(cfg.generations, 0));
    if (cfg.ns_list.size() != g + 1)
        fail("ns_list length must be G+1=" + std::to_string(g + 1));
    if (cfg.nk_list.size() != g)
        fail("nk_list length must be G=" + std::to_string(g));
    for (std::size_t i = 0; i < cfg.ns_list.size(); ++i) {
        if (cfg.ns_list[i] < 1)
            fail("ns_list[" + std::to_string(i) + "] >= 1");
    }
    for (std::size_t i = 0; i < cfg.nk_list.size(); ++i) {
        if (cfg.nk_list[i] < 1)
            fail("nk_list[" + std::to_string(i) + "] >= 1");
    }
    if (cfg.max_optimization_times < 1) fail("max_optimization_times >= 1");
    if (cfg.parallel_samples < 1) fail("parallel_samples >= 1");
    if (cfg.tournament_size < 2) fail("tournament_size >= 2");
    if (cfg.elite_count < 1) fail("elite_count >= 1");
    if (cfg.epoch_top_k < 1) fail("epoch_top_k >= 1");

    if (cfg.elite_count >= 1 && !cfg.ns_list.empty() && cfg.nk_list.size() == g && g > 0) {
        int min_quota = cfg.nk_list[0];
        for (int v : cfg.nk_list) min_quota = std::min(min_quota, v);
        for (std::size_t i = 1; i < cfg.ns_list.size(); ++i)
            min_quota = std::min(min_quota, cfg.ns_list[i]);
        if (cfg.elite_count > min_quota)
            fail("elite_count must not exceed the smallest selection quota (" +
                 std::to_string(min_quota) + ")");
    }
    return violations;
}

std::vector<std::string> validate_gpu_spec(const GpuSpec& spec) {
    std::vector<std::string> violations;
    if (spec.peak_bandwidth_bytes_per_s <= 0.0)
        violations.push_back("peak_bandwidth_bytes_per_s must be positive");
    if (spec.units.empty()) violations.push_back("units must be non-empty");
    for (const auto& unit : spec.units) {
        if (unit.peak_flops_per_s <= 0.0)
            violations.push_back("unit '" + unit.name + "' peak_flops_per_s must be positive");
    }
    return violations;
}

using nlohmann::json;

json to_json(const KernelSource& k) {
    return json{{"task_id", k.task_id},
                {"source_text", k.source_text},
                {"description", k.description}};
}

KernelSource kernel_source_from_json(const json& j) {
    KernelSource k;
    k.task_id = j.at("task_id").get<std::string>();
    k.source_text = j.at("source_text").get<std::string>();
    k.description = j.at("description").get<std::string>();
    return k;
}

json to_json(const Strategy& s) {
    json tags = json::array();
    for (const auto& tag : s.tags) tags.push_back(tag.to_string());
    return json{{"id", s.id},
                {"title", s.title},
                {"body", s.body},
                {"tags", std::move(tags)},
                {"origin", to_string(s.origin)}};
}

Strategy strategy_from_json(const json& j) {
    Strategy s;
    s.id = j.at("id").get<std::string>();
    s.title = j.at("title").get<std::string>();
    s.body = j.at("body").get<std::string>();
    for (const auto& tag : j.at("tags")) s.tags.insert(StrategyTag::parse(tag.get<std::string>()));
    s.origin = strategy_origin_from_string(j.at("origin").get<std::string>());
    return s;
}

json to_json(const PerfMetrics& m) {
    json j;
    if (m.avg_latency_ms) j["avg_latency_ms"] = *m.avg_latency_ms;
    if (m.sm_throughput_pct) j["sm_throughput_pct"] = *m.sm_throughput_pct;
    if (m.mem_throughput_pct) j["mem_throughput_pct"] = *m.mem_throughput_pct;
    if (m.dram_throughput_pct) j["dram_throughput_pct"] = *m.dram_throughput_pct;
    if (m.l2_hit_rate_pct) j["l2_hit_rate_pct"] = *m.l2_hit_rate_pct;
    j["correct"] = m.correct;
    return j;
}

PerfMetrics perf_metrics_from_json(const json& j) {
    PerfMetrics m;
    if (j.contains("avg_latency_ms")) m.avg_latency_ms = j.at("avg_latency_ms").get<double>();
    if (j.contains("sm_throughput_pct")) m.sm_throughput_pct = j.at("sm_throughput_pct").get<double>();
    if (j.contains("mem_throughput_pct"))
        m.mem_throughput_pct = j.at("mem_throughput_pct").get<double>();
    if (j.contains("dram_throughput_pct"))
        m.dram_throughput_pct = j.at("dram_throughput_pct").get<double>();
    if (j.contains("l2_hit_rate_pct")) m.l2_hit_rate_pct = j.at("l2_hit_rate_pct").get<double>();
    m.correct = j.at("correct").get<bool>();
    return m;
}

json to_json(const Lineage& l) {
    json j{{"epoch", l.epoch}, {"generation", l.generation}};
    if (l.parent_kernel_id) j["parent_kernel_id"] = *l.parent_kernel_id;
    if (l.parent_strategy_id) j["parent_strategy_id"] = *l.parent_strategy_id;
    return j;
}

Lineage lineage_from_json(const json& j) {
    Lineage l;
    l.epoch = j.at("epoch").get<int>();
    l.generation = j.at("generation").get<int>();
    if (j.contains("parent_kernel_id"))
        l.parent_kernel_id = j.at("parent_kernel_id").get<std::string>();
    if (j.contains("parent_strategy_id"))
        l.parent_strategy_id = j.at("parent_strategy_id").get<std::string>();
    return l;
}

json to_json(const Individual& ind) {
    json j{{"id", ind.id},
           {"kernel", to_json(ind.kernel)},
           {"strategy", to_json(ind.strategy)},
           {"lineage", to_json(ind.lineage)},
           {"optimization_rounds_used", ind.optimization_rounds_used}};
    if (ind.metrics) j["metrics"] = to_json(*ind.metrics);
    return j;
}

Individual individual_from_json(const json& j) {
    Individual ind;
    ind.id = j.at("id").get<std::string>();
    ind.kernel = kernel_source_from_json(j.at("kernel"));
    ind.strategy = strategy_from_json(j.at("strategy"));
    if (j.contains("metrics")) ind.metrics = perf_metrics_from_json(j.at("metrics"));
    ind.lineage = lineage_from_json(j.at("lineage"));
    ind.optimization_rounds_used = j.at("optimization_rounds_used").get<int>();
    return ind;
}

json to_json(const Population& p) {
    json arr = json::array();
    for (const auto& ind : p.individuals) arr.push_back(to_json(ind));
    return json{{"individuals", std::move(arr)}, {"generation", p.generation}, {"epoch", p.epoch}};
}

Population population_from_json(const json& j) {
    Population p;
    for (const auto& item : j.at("individuals")) p.individuals.push_back(individual_from_json(item));
    p.generation = j.at("generation").get<int>();
    p.epoch = j.at("epoch").get<int>();
    return p;
}

json to_json(const EvolutionConfig& c) {
    return json{{"epochs", c.epochs},
                {"generations", c.generations},
                {"ns_list", c.ns_list},
                {"nk_list", c.nk_list},
                {"max_optimization_times", c.max_optimization_times},
                {"parallel_samples", c.parallel_samples},
                {"tournament_size", c.tournament_size},
                {"elite_count", c.elite_count},
                {"epoch_top_k", c.epoch_top_k},
                {"rng_seed", c.rng_seed}};
}

EvolutionConfig evolution_config_from_json(const json& j) {
    EvolutionConfig c;
    c.epochs = j.at("epochs").get<int>();
    c.generations = j.at("generations").get<int>();
    c.ns_list = j.at("ns_list").get<std::vector<int>>();
    c.nk_list = j.at("nk_list").get<std::vector<int>>();
    c.max_optimization_times = j.at("max_optimization_times").get<int>();
    c.parallel_samples = j.at("parallel_samples").get<int>();
    c.tournament_size = j.at("tournament_size").get<int>();
    c.elite_count = j.at("elite_count").get<int>();
    c.epoch_top_k = j.at("epoch_top_k").get<int>();
    c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    return c;
}

json to_json(const GpuSpec& spec) {
    json units = json::array();
    for (const auto& unit : spec.units)
        units.push_back(json{{"name", unit.name}, {"peak_flops_per_s", unit.peak_flops_per_s}});
    return json{{"name", spec.name},
                {"peak_bandwidth_bytes_per_s", spec.peak_bandwidth_bytes_per_s},
                {"units", std::move(units)}};
}

GpuSpec gpu_spec_from_json(const json& j) {
    GpuSpec spec;
    spec.name = j.at("name").get<std::string>();
    spec.peak_bandwidth_bytes_per_s = j.at("peak_bandwidth_bytes_per_s").get<double>();
    for (const auto& item : j.at("units")) {
        GpuUnit unit;
        unit.name = item.at("name").get<std::string>();
        unit.peak_flops_per_s = item.at("peak_flops_per_s").get<double>();
        spec.units.push_back(std::move(unit));
    }
    return spec;
}

} // namespace kevo
