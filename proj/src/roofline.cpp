#include "kevo/roofline.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <tuple>

#include <nlohmann/json.hpp>

namespace kevo {

std::string to_string(RooflineZone zone) {
    switch (zone) {
        case RooflineZone::MemoryBound: return "memory_bound";
        case RooflineZone::ComputeBound: return "compute_bound";
        case RooflineZone::MiddleZone: return "middle_zone";
    }
    return "middle_zone";
}

RooflineZone roofline_zone_from_string(const std::string& text) {
    if (text == "memory_bound") return RooflineZone::MemoryBound;
    if (text == "compute_bound") return RooflineZone::ComputeBound;
    if (text == "middle_zone") return RooflineZone::MiddleZone;
    throw std::invalid_argument("unknown roofline zone: " + text);
}

double arithmetic_intensity(double flops, double bytes) {
    if (bytes <= 0.0) throw std::invalid_argument("arithmetic_intensity: bytes must be positive");
    if (flops < 0.0) throw std::invalid_argument("arithmetic_intensity: flops must be non-negative");
    return flops / bytes;
}

namespace {

std::pair<double, double> thresholds(const GpuSpec& spec) {
    if (spec.units.empty() || spec.peak_bandwidth_bytes_per_s <= 0.0)
        throw std::invalid_argument("classify: invalid GPU spec");
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& unit : spec.units) {
        lo = std::min(lo, unit.peak_flops_per_s);
        hi = std::max(hi, unit.peak_flops_per_s);
    }
    return {lo / spec.peak_bandwidth_bytes_per_s, hi / spec.peak_bandwidth_bytes_per_s};
}

} // namespace

RooflineVerdict classify(const GpuSpec& spec, double ai) {
    const auto [low, high] = thresholds(spec);
    RooflineVerdict verdict;
    verdict.arithmetic_intensity = ai;
    verdict.low_threshold = low;
    verdict.high_threshold = high;
    if (ai < low) {
        verdict.zone = RooflineZone::MemoryBound;
    } else if (ai > high) {
        verdict.zone = RooflineZone::ComputeBound;
    } else {
        verdict.zone = RooflineZone::MiddleZone;
    }
    return verdict;
}

RooflineVerdict middle_zone_fallback(const GpuSpec& spec) {
    const auto [low, high] = thresholds(spec);
    RooflineVerdict verdict;
    verdict.zone = RooflineZone::MiddleZone;
    verdict.low_threshold = low;
    verdict.high_threshold = high;
    verdict.arithmetic_intensity = (low + high) / 2.0;
    return verdict;
}

GuidanceTags guidance(const RooflineVerdict& verdict) {
    GuidanceTags g;
    g.zone = verdict.zone;
    const std::vector<std::string> compute_metrics = {"sm_throughput_pct", "branch_efficiency_pct"};
    const std::vector<std::string> memory_metrics = {"mem_throughput_pct", "dram_throughput_pct",
                                                     "l2_hit_rate_pct"};
    const std::vector<StrategyTag::Kind> compute_tags = {StrategyTag::Kind::TensorCore,
                                                         StrategyTag::Kind::Tiling,
                                                         StrategyTag::Kind::MultiStagePipeline};
    const std::vector<StrategyTag::Kind> memory_tags = {
        StrategyTag::Kind::VectorizedAccess, StrategyTag::Kind::Swizzle,
        StrategyTag::Kind::MemoryPadding, StrategyTag::Kind::AsyncCopy};

    auto push_metrics = [&](const std::vector<std::string>& names) {
        g.metric_focus.insert(g.metric_focus.end(), names.begin(), names.end());
    };
    auto push_tags = [&](const std::vector<StrategyTag::Kind>& kinds) {
        for (auto kind : kinds) g.strategy_priority.emplace_back(kind);
    };

    switch (verdict.zone) {
        case RooflineZone::ComputeBound:
            push_metrics(compute_metrics);
            push_tags(compute_tags);
            g.prompt_preamble =
                "This kernel is compute-bound on the target GPU. Prioritize raising the "
                "utilization of the computation units: prefer tensor-core usage, register and "
                "shared-memory tiling, and multi-stage software pipelining. Judge progress by SM "
                "throughput and branch efficiency.";
            break;
        case RooflineZone::MemoryBound:
            push_metrics(memory_metrics);
            push_tags(memory_tags);
            g.prompt_preamble =
                "This kernel is memory-bound on the target GPU. Prioritize raising effective "
                "memory bandwidth: vectorized and coalesced access, shared-memory padding and "
                "layout swizzles against bank conflicts, and asynchronous copies. Judge progress "
                "by memory and DRAM throughput and the L2 hit rate.";
            break;
        case RooflineZone::MiddleZone:
            push_metrics(compute_metrics);
            push_metrics(memory_metrics);
            push_tags(compute_tags);
            push_tags(memory_tags);
            g.prompt_preamble =
                "This kernel sits between the memory and compute ceilings of the target GPU. "
                "Both computation and memory-access optimizations pay off; balance tensor-core "
                "and tiling work against bandwidth and cache-locality improvements.";
            break;
    }
    return g;
}

bool FitnessKey::operator<(const FitnessKey& rhs) const {
    return std::tie(failure_rank, latency_ms, rhs.utilization_pct, id_value, id_text) <
           std::tie(rhs.failure_rank, rhs.latency_ms, utilization_pct, rhs.id_value, rhs.id_text);
}

bool FitnessKey::operator==(const FitnessKey& rhs) const {
    return failure_rank == rhs.failure_rank && latency_ms == rhs.latency_ms &&
           utilization_pct == rhs.utilization_pct && id_value == rhs.id_value &&
           id_text == rhs.id_text;
}

FitnessKey fitness_key(const Individual& ind, const RooflineVerdict& verdict) {
    FitnessKey key;
    key.id_text = ind.id;
    key.id_value = std::strtoull(ind.id.c_str(), nullptr, 10);
    if (!ind.evaluated_correct() || !ind.metrics->avg_latency_ms.has_value()) {
        key.failure_rank = 1;
        key.latency_ms = std::numeric_limits<double>::infinity();
        return key;
    }
    key.failure_rank = 0;
    key.latency_ms = *ind.metrics->avg_latency_ms;
    const double sm = ind.metrics->sm_throughput_pct.value_or(0.0);
    const double mem = ind.metrics->mem_throughput_pct.value_or(0.0);
    switch (verdict.zone) {
        case RooflineZone::ComputeBound: key.utilization_pct = sm; break;
        case RooflineZone::MemoryBound: key.utilization_pct = mem; break;
        case RooflineZone::MiddleZone: key.utilization_pct = (sm + mem) / 2.0; break;
    }
    return key;
}

nlohmann::json to_json(const RooflineVerdict& v) {
    return nlohmann::json{{"zone", to_string(v.zone)},
                          {"arithmetic_intensity", v.arithmetic_intensity},
                          {"low_threshold", v.low_threshold},
                          {"high_threshold", v.high_threshold}};
}

RooflineVerdict roofline_verdict_from_json(const nlohmann::json& j) {
    RooflineVerdict v;
    v.zone = roofline_zone_from_string(j.at("zone").get<std::string>());
    v.arithmetic_intensity = j.at("arithmetic_intensity").get<double>();
    v.low_threshold = j.at("low_threshold").get<double>();
    v.high_threshold = j.at("high_threshold").get<double>();
    return v;
}

} // namespace kevo
