#pragma once

#include <string>
#include <vector>

#include "kevo/domain.hpp"

namespace kevo {

enum class RooflineZone { MemoryBound, ComputeBound, MiddleZone };

std::string to_string(RooflineZone zone);
RooflineZone roofline_zone_from_string(const std::string& text);

/// Zone classification of a task against a GPU's roofline ceilings.
/// low_threshold and high_threshold are the arithmetic intensities where the
/// bandwidth line meets the slowest and fastest compute unit ceilings.
struct RooflineVerdict {
    RooflineZone zone = RooflineZone::MiddleZone;
    double arithmetic_intensity = 0.0;
    double low_threshold = 0.0;
    double high_threshold = 0.0;

    bool operator==(const RooflineVerdict&) const = default;
};

/// Zone-derived prompting guidance: which profiler metrics to surface and
/// which strategy families to push first.
struct GuidanceTags {
    RooflineZone zone = RooflineZone::MiddleZone;
    std::vector<std::string> metric_focus;
    std::vector<StrategyTag> strategy_priority;
    std::string prompt_preamble;
};

/// AI = flops / bytes. Throws std::invalid_argument when bytes <= 0 or
/// flops < 0 (degenerate input).
double arithmetic_intensity(double flops, double bytes);

/// Classifies ai against min(unit)/bw and max(unit)/bw. Boundary values are
/// inclusive to MiddleZone.
RooflineVerdict classify(const GpuSpec& spec, double ai);

GuidanceTags guidance(const RooflineVerdict& verdict);

/// Builds a MiddleZone verdict from the GPU description alone, used when no
/// intensity estimate is available (prophet failure fallback).
RooflineVerdict middle_zone_fallback(const GpuSpec& spec);

/// Strict-weak-order key ranking individuals best-first: evaluated-correct
/// before anything else, then latency ascending, then zone-targeted
/// utilization descending, then id ascending.
struct FitnessKey {
    int failure_rank = 1; // 0 = evaluated correct
    double latency_ms = 0.0;
    double utilization_pct = 0.0;
    std::uint64_t id_value = 0;
    std::string id_text;

    bool operator<(const FitnessKey& rhs) const;
    bool operator==(const FitnessKey& rhs) const;
};

FitnessKey fitness_key(const Individual& ind, const RooflineVerdict& verdict);

nlohmann::json to_json(const RooflineVerdict&);
RooflineVerdict roofline_verdict_from_json(const nlohmann::json&);

} // namespace kevo
