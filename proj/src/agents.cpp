#include "kevo/agents.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace kevo {

namespace {

std::string trim_copy(const std::string& text) {
    auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

std::string camel_to_snake(const std::string& name) {
    std::string out;
    for (char c : name) {
        if (std::isupper(static_cast<unsigned char>(c))) {
            if (!out.empty()) out.push_back('_');
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            out.push_back(c);
        }
    }
    return out;
}

std::string replace_placeholders(const std::string& text,
                                 const std::map<std::string, std::string>& values,
                                 std::vector<std::string>& missing) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto open = text.find("{{", pos);
        if (open == std::string::npos) {
            out.append(text, pos, std::string::npos);
            break;
        }
        auto close = text.find("}}", open + 2);
        if (close == std::string::npos) {
            out.append(text, pos, std::string::npos);
            break;
        }
        out.append(text, pos, open - pos);
        const std::string name = text.substr(open + 2, close - open - 2);
        auto it = values.find(name);
        if (it == values.end()) {
            missing.push_back(name);
        } else {
            out += it->second;
        }
        pos = close + 2;
    }
    return out;
}

} // namespace

std::vector<std::string> template_placeholders(const std::string& text) {
    std::vector<std::string> names;
    std::size_t pos = 0;
    while (true) {
        auto open = text.find("{{", pos);
        if (open == std::string::npos) break;
        auto close = text.find("}}", open + 2);
        if (close == std::string::npos) break;
        names.push_back(text.substr(open + 2, close - open - 2));
        pos = close + 2;
    }
    return names;
}

Result<ChatRequest, TemplateError> PromptTemplate::render(
    const std::map<std::string, std::string>& values) const {
    std::vector<std::string> missing;
    ChatRequest req;
    req.role_label = role_label;
    req.system_prompt = replace_placeholders(system_text, values, missing);
    req.user_prompt = replace_placeholders(user_text, values, missing);
    if (!missing.empty()) {
        std::string message = "template for " + role_label + " missing placeholder values:";
        for (const auto& name : missing) message += " " + name;
        return TemplateError{message};
    }
    return req;
}

namespace {

PromptTemplate make_template(const char* role, std::string system_text, std::string user_text) {
    return PromptTemplate{role, std::move(system_text), std::move(user_text)};
}

std::map<std::string, PromptTemplate> builtin_templates() {
    std::map<std::string, PromptTemplate> t;

    t[kRoleKernelGenerator] = make_template(
        kRoleKernelGenerator,
        "You are a CUDA kernel engineer. Write one complete, functionally correct CUDA kernel "
        "with its launch wrapper for the task below. Favor a simple, obviously correct "
        "implementation. Reply with exactly one fenced code block and nothing else.",
        "Task:\n{{task_description}}\n\n{{roofline_preamble}}\n\n"
        "Return the full kernel source in a single fenced code block.");

    t[kRoleStrategyGenerator] = make_template(
        kRoleStrategyGenerator,
        "You are a GPU performance architect. Propose distinct optimization strategies for the "
        "kernel below. Each strategy must be a concrete, self-contained optimization plan. "
        "Respond with exactly the requested number of blocks, each formatted as:\n"
        "### STRATEGY\ntitle: <short name>\ntags: <comma-separated tags>\nbody:\n<plan text>",
        "{{roofline_preamble}}\n\nCurrent kernel:\n```cuda\n{{kernel_source}}\n```\n\n"
        "Reference strategies from past optimizations of similar kernels:\n{{retrieved_strategies}}\n\n"
        "Propose {{strategy_count}} distinct optimization strategies.");

    t[kRoleStrategyApplication] = make_template(
        kRoleStrategyApplication,
        "You are a CUDA kernel optimization engineer. Rewrite the kernel so it implements the "
        "given optimization strategy while preserving functional behavior. Reply with exactly "
        "one fenced code block containing the full rewritten kernel.",
        "{{roofline_preamble}}\n\nStrategy to apply: {{strategy_title}}\n{{strategy_body}}\n\n"
        "Current kernel:\n```cuda\n{{kernel_source}}\n```\n\n"
        "Past optimizations of similar kernels (initial -> optimized, with measurements):\n"
        "{{history_examples}}\n\nProfiling hints from the previous round:\n{{profiler_hints}}\n\n"
        "Return the full rewritten kernel in a single fenced code block.");

    t[kRoleStrategyAlignment] = make_template(
        kRoleStrategyAlignment,
        "You are a GPU performance architect. Rewrite the optimization strategy so it describes "
        "what the final kernel below actually implements, including techniques that were added "
        "or dropped during optimization. Respond with exactly one block formatted as:\n"
        "### STRATEGY\ntitle: <short name>\ntags: <comma-separated tags>\nbody:\n<plan text>",
        "Original strategy: {{old_strategy_title}}\n{{old_strategy_body}}\n\n"
        "Final kernel:\n```cuda\n{{kernel_source}}\n```\n\n"
        "Rewrite the strategy to match the final kernel.");

    t[kRoleKernelRevisor] = make_template(
        kRoleKernelRevisor,
        "You are a CUDA debugging specialist. Fix the kernel so it compiles and produces correct "
        "results, changing as little as possible. Reply with exactly one fenced code block "
        "containing the full corrected kernel.",
        "Kernel:\n```cuda\n{{kernel_source}}\n```\n\nDiagnostics:\n{{diagnostics}}\n\n"
        "Return the corrected kernel in a single fenced code block.");

    t[kRoleProfileAnalyst] = make_template(
        kRoleProfileAnalyst,
        "You are a GPU profiling analyst. Identify the main bottleneck from the measurements "
        "below and suggest what the next optimization round should change. Answer in a short "
        "paragraph of plain text.",
        "{{roofline_preamble}}\n\nMeasurements:\n{{metrics_block}}\n\n"
        "What should the next optimization round focus on?");

    t[kRoleRooflineProphet] = make_template(
        kRoleRooflineProphet,
        "You are a GPU performance modeling expert. Estimate the total floating-point operations "
        "and bytes moved between DRAM and the chip for one execution of the task below. Answer "
        "with exactly two lines:\nflops: <number>\nbytes: <number>",
        "Task:\n{{task_description}}\n\nTarget GPU:\n{{gpu_spec}}\n\n"
        "Estimate the FLOP count and the bytes moved.");

    return t;
}

Result<PromptTemplate, TemplateError> parse_template_file(const std::string& path,
                                                          const std::string& role_label) {
    std::ifstream in(path);
    if (!in.is_open()) return TemplateError{"cannot open template file: " + path};
    std::string line;
    std::string section;
    std::string system_text;
    std::string user_text;
    while (std::getline(in, line)) {
        const std::string trimmed = trim_copy(line);
        if (trimmed == "[system]") {
            section = "system";
            continue;
        }
        if (trimmed == "[user]") {
            section = "user";
            continue;
        }
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (section == "system") {
            system_text += line;
            system_text.push_back('\n');
        } else if (section == "user") {
            user_text += line;
            user_text.push_back('\n');
        }
    }
    if (system_text.empty() || user_text.empty())
        return TemplateError{"template file " + path + " needs [system] and [user] sections"};
    return PromptTemplate{role_label, trim_copy(system_text), trim_copy(user_text)};
}

} // namespace

TemplateLibrary::TemplateLibrary() : templates_(builtin_templates()) {}

Result<TemplateLibrary, TemplateError> TemplateLibrary::load(const std::string& directory) {
    namespace fs = std::filesystem;
    TemplateLibrary lib;
    if (directory.empty()) return lib;
    std::error_code ec;
    if (!fs::is_directory(directory, ec))
        return TemplateError{"template directory does not exist: " + directory};

    const std::vector<std::string> roles = {
        kRoleKernelGenerator, kRoleStrategyGenerator, kRoleStrategyApplication,
        kRoleStrategyAlignment, kRoleKernelRevisor, kRoleProfileAnalyst, kRoleRooflineProphet};
    const std::vector<RooflineZone> zones = {RooflineZone::MemoryBound, RooflineZone::ComputeBound,
                                             RooflineZone::MiddleZone};

    for (const auto& role : roles) {
        const std::string base = directory + "/" + camel_to_snake(role);
        if (fs::exists(base + ".txt", ec)) {
            auto parsed = parse_template_file(base + ".txt", role);
            if (!parsed) return parsed.error();
            lib.templates_[role] = parsed.value();
        }
        for (auto zone : zones) {
            const std::string path = base + "." + to_string(zone) + ".txt";
            if (fs::exists(path, ec)) {
                auto parsed = parse_template_file(path, role);
                if (!parsed) return parsed.error();
                lib.templates_[role + "." + to_string(zone)] = parsed.value();
            }
        }
    }
    return lib;
}

PromptTemplate TemplateLibrary::get(const std::string& role_label, RooflineZone zone) const {
    if (auto it = templates_.find(role_label + "." + to_string(zone)); it != templates_.end())
        return it->second;
    if (auto it = templates_.find(role_label); it != templates_.end()) return it->second;
    // Unknown role: surface the problem at render time with an empty template.
    return PromptTemplate{role_label, "", ""};
}

std::optional<std::string> extract_fenced_code(const std::string& completion) {
    std::istringstream lines(completion);
    std::string line;
    bool inside = false;
    std::string code;
    while (std::getline(lines, line)) {
        std::string trimmed = trim_copy(line);
        if (trimmed.rfind("```", 0) == 0) {
            if (inside) return code; // closing fence; ignore trailing text
            inside = true;
            continue;
        }
        if (inside) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            code += line;
            code.push_back('\n');
        }
    }
    return std::nullopt; // no block, or fence never closed
}

std::vector<StrategyBlock> parse_strategy_blocks(const std::string& completion) {
    std::vector<StrategyBlock> blocks;
    std::istringstream lines(completion);
    std::string line;
    StrategyBlock current;
    bool in_block = false;
    bool in_body = false;

    auto flush = [&] {
        if (in_block) {
            current.body = trim_copy(current.body);
            if (!current.body.empty()) blocks.push_back(current);
        }
        current = StrategyBlock{};
        in_body = false;
    };

    while (std::getline(lines, line)) {
        const std::string trimmed = trim_copy(line);
        if (trimmed.rfind("### STRATEGY", 0) == 0) {
            flush();
            in_block = true;
            continue;
        }
        if (!in_block) continue;
        if (!in_body && trimmed.rfind("title:", 0) == 0) {
            current.title = trim_copy(trimmed.substr(6));
        } else if (!in_body && trimmed.rfind("tags:", 0) == 0) {
            std::istringstream tags(trimmed.substr(5));
            std::string tag;
            while (std::getline(tags, tag, ',')) {
                const std::string name = trim_copy(tag);
                if (!name.empty()) current.tags.insert(StrategyTag::parse(name));
            }
        } else if (!in_body && trimmed.rfind("body:", 0) == 0) {
            in_body = true;
            const std::string inline_body = trim_copy(trimmed.substr(5));
            if (!inline_body.empty()) {
                current.body += inline_body;
                current.body.push_back('\n');
            }
        } else if (in_body) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            current.body += line;
            current.body.push_back('\n');
        }
    }
    flush();
    return blocks;
}

std::optional<std::pair<double, double>> parse_flops_bytes(const std::string& completion) {
    auto scan = [&](const std::string& label) -> std::optional<double> {
        std::string folded;
        folded.reserve(completion.size());
        for (char c : completion)
            folded.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        auto pos = folded.find(label);
        if (pos == std::string::npos) return std::nullopt;
        pos += label.size();
        while (pos < folded.size() &&
               (folded[pos] == ':' || folded[pos] == '=' || folded[pos] == ' ' ||
                folded[pos] == '\t'))
            ++pos;
        char* end = nullptr;
        const double value = std::strtod(completion.c_str() + pos, &end);
        if (end == completion.c_str() + pos) return std::nullopt;
        return value;
    };
    const auto flops = scan("flops");
    const auto bytes = scan("bytes");
    if (!flops || !bytes) return std::nullopt;
    return std::make_pair(*flops, *bytes);
}

Agents::Agents(ChatProvider& provider, TemplateLibrary templates, AgentOptions options)
    : provider_(provider), templates_(std::move(templates)), options_(options) {}

void Agents::bump(const std::string& counter, std::int64_t amount) const {
    std::lock_guard<std::mutex> lock(telemetry_mutex_);
    telemetry_[counter] += amount;
}

Result<KernelSource, AgentError> Agents::generate_vanilla_kernel(const TaskDefinition& task,
                                                                 const GuidanceTags& g,
                                                                 EvalBackend& backend) const {
    auto rendered = templates_.get(kRoleKernelGenerator, g.zone)
                        .render({{"task_description", task.description},
                                 {"roofline_preamble", g.prompt_preamble}});
    if (!rendered)
        return AgentError{AgentError::Kind::Template, rendered.error().message, {}};

    auto responses = provider_.complete_many(rendered.value(), options_.parallel_samples);
    std::vector<std::string> diagnostics;
    for (std::size_t i = 0; i < responses.size(); ++i) {
        if (!responses[i].ok()) {
            diagnostics.push_back("sample " + std::to_string(i) + ": provider " +
                                  to_string(responses[i].error().kind) + ": " +
                                  responses[i].error().message);
            continue;
        }
        auto code = extract_fenced_code(responses[i].value().text);
        if (!code || trim_copy(*code).empty()) {
            diagnostics.push_back("sample " + std::to_string(i) + ": no fenced code block");
            bump("vanilla_parse_drops");
            continue;
        }
        KernelSource kernel{task.task_id, *code, task.description};
        EvalOutcome outcome = evaluate(backend, kernel, task);
        if (outcome_is_correct(outcome)) return kernel;
        diagnostics.push_back("sample " + std::to_string(i) + ": " + describe_failure(outcome));
    }
    if (all_failed(responses))
        return AgentError{AgentError::Kind::Provider, aggregate_error(responses).message,
                          diagnostics};
    return AgentError{AgentError::Kind::GenerationFailure,
                      "no sample produced a correct vanilla kernel", diagnostics};
}

namespace {

std::string format_retrieved(const std::vector<Strategy>& retrieved) {
    if (retrieved.empty()) return "(none)";
    std::string out;
    for (const auto& s : retrieved) {
        out += "- " + s.title + "\n";
        out += s.body;
        if (out.back() != '\n') out.push_back('\n');
    }
    return out;
}

std::string format_history(const std::vector<PoolRecord>& history) {
    if (history.empty()) return "(none)";
    std::ostringstream out;
    for (const auto& r : history) {
        out << "Example (" << r.strategy.title << "):\n";
        out << "initial kernel:\n" << r.initial_kernel.source_text << "\n";
        out << "optimized kernel:\n" << r.optimized_kernel.source_text << "\n";
        if (r.metrics_before && r.metrics_before->avg_latency_ms)
            out << "latency before: " << *r.metrics_before->avg_latency_ms << " ms\n";
        if (r.metrics_after.avg_latency_ms)
            out << "latency after: " << *r.metrics_after.avg_latency_ms << " ms\n";
    }
    return out.str();
}

} // namespace

Result<std::vector<Strategy>, AgentError> Agents::generate_strategies(
    const KernelSource& kernel, int ns0, const GuidanceTags& g,
    const std::vector<Strategy>& retrieved, IdGen& ids) const {
    if (ns0 < 1)
        return AgentError{AgentError::Kind::StrategyShortfall, "ns0 must be >= 1", {}};

    auto rendered = templates_.get(kRoleStrategyGenerator, g.zone)
                        .render({{"kernel_source", kernel.source_text},
                                 {"roofline_preamble", g.prompt_preamble},
                                 {"retrieved_strategies", format_retrieved(retrieved)},
                                 {"strategy_count", std::to_string(ns0)}});
    if (!rendered) return AgentError{AgentError::Kind::Template, rendered.error().message, {}};

    std::vector<Strategy> collected;
    std::set<std::string> seen_bodies;
    std::vector<std::string> diagnostics;
    int provider_failures = 0;

    const int attempts = 1 + options_.generation_retries;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (static_cast<int>(collected.size()) >= ns0) break;
        auto response = provider_.complete(rendered.value());
        if (!response.ok()) {
            ++provider_failures;
            diagnostics.push_back("attempt " + std::to_string(attempt + 1) + ": provider " +
                                  to_string(response.error().kind) + ": " +
                                  response.error().message);
            continue;
        }
        auto blocks = parse_strategy_blocks(response.value().text);
        if (blocks.empty())
            diagnostics.push_back("attempt " + std::to_string(attempt + 1) +
                                  ": no strategy blocks parsed");
        for (const auto& block : blocks) {
            const std::string normalized = normalized_strategy_body(block.body);
            if (normalized.empty() || seen_bodies.count(normalized)) continue;
            seen_bodies.insert(normalized);
            Strategy s;
            s.id = ids.alloc();
            s.title = block.title.empty() ? "strategy " + s.id : block.title;
            s.body = block.body;
            s.tags = block.tags;
            s.origin = StrategyOrigin::Generated;
            collected.push_back(std::move(s));
            if (static_cast<int>(collected.size()) >= ns0) break;
        }
    }

    if (static_cast<int>(collected.size()) < ns0) {
        if (provider_failures == attempts)
            return AgentError{AgentError::Kind::Provider, "all strategy-generation calls failed",
                              diagnostics};
        return AgentError{AgentError::Kind::StrategyShortfall,
                          "needed " + std::to_string(ns0) + " distinct strategies, got " +
                              std::to_string(collected.size()) + " after " +
                              std::to_string(attempts) + " attempts",
                          diagnostics};
    }
    return collected;
}

Result<std::vector<KernelSource>, AgentError> Agents::apply_strategy(
    const Individual& ind, const GuidanceTags& g, const std::vector<PoolRecord>& history,
    const std::optional<std::string>& hints) const {
    auto rendered = templates_.get(kRoleStrategyApplication, g.zone)
                        .render({{"strategy_title", ind.strategy.title},
                                 {"strategy_body", ind.strategy.body},
                                 {"kernel_source", ind.kernel.source_text},
                                 {"roofline_preamble", g.prompt_preamble},
                                 {"history_examples", format_history(history)},
                                 {"profiler_hints", hints.value_or("(none)")}});
    if (!rendered) return AgentError{AgentError::Kind::Template, rendered.error().message, {}};

    auto responses = provider_.complete_many(rendered.value(), options_.parallel_samples);
    std::vector<KernelSource> candidates;
    std::vector<std::string> diagnostics;
    for (std::size_t i = 0; i < responses.size(); ++i) {
        if (!responses[i].ok()) {
            bump("apply_provider_errors");
            diagnostics.push_back("sample " + std::to_string(i) + ": provider " +
                                  to_string(responses[i].error().kind) + ": " +
                                  responses[i].error().message);
            continue;
        }
        auto code = extract_fenced_code(responses[i].value().text);
        if (!code || trim_copy(*code).empty()) {
            bump("apply_parse_drops");
            diagnostics.push_back("sample " + std::to_string(i) + ": no fenced code block");
            continue;
        }
        candidates.push_back(KernelSource{ind.kernel.task_id, *code, ind.kernel.description});
    }
    if (candidates.empty()) {
        if (all_failed(responses))
            return AgentError{AgentError::Kind::Provider, aggregate_error(responses).message,
                              diagnostics};
        return AgentError{AgentError::Kind::ApplicationFailure,
                          "no parseable kernel candidate among " +
                              std::to_string(responses.size()) + " samples",
                          diagnostics};
    }
    return candidates;
}

Result<Strategy, AgentError> Agents::align_strategy(const KernelSource& k_opt,
                                                    const Strategy& s_old, const GuidanceTags& g,
                                                    IdGen& ids) const {
    auto rendered = templates_.get(kRoleStrategyAlignment, g.zone)
                        .render({{"old_strategy_title", s_old.title},
                                 {"old_strategy_body", s_old.body},
                                 {"kernel_source", k_opt.source_text}});
    if (!rendered) return AgentError{AgentError::Kind::Template, rendered.error().message, {}};

    auto response = provider_.complete(rendered.value());
    if (!response.ok())
        return AgentError{AgentError::Kind::Provider,
                          "alignment call failed: " + response.error().message, {}};
    auto blocks = parse_strategy_blocks(response.value().text);
    if (blocks.empty())
        return AgentError{AgentError::Kind::AlignmentFailure,
                          "alignment response contained no strategy block", {}};
    Strategy aligned;
    aligned.id = ids.alloc();
    aligned.title = blocks.front().title.empty() ? s_old.title : blocks.front().title;
    aligned.body = blocks.front().body;
    aligned.tags = blocks.front().tags;
    aligned.origin = StrategyOrigin::Aligned;
    return aligned;
}

Result<KernelSource, AgentError> Agents::revise_kernel(const KernelSource& kernel,
                                                       const std::string& diagnostics,
                                                       const GuidanceTags& g) const {
    assert(!diagnostics.empty());
    auto rendered = templates_.get(kRoleKernelRevisor, g.zone)
                        .render({{"kernel_source", kernel.source_text},
                                 {"diagnostics", diagnostics}});
    if (!rendered) return AgentError{AgentError::Kind::Template, rendered.error().message, {}};

    auto responses = provider_.complete_many(rendered.value(), options_.parallel_samples);
    std::vector<std::string> drops;
    for (std::size_t i = 0; i < responses.size(); ++i) {
        if (!responses[i].ok()) {
            drops.push_back("sample " + std::to_string(i) + ": provider " +
                            responses[i].error().message);
            continue;
        }
        auto code = extract_fenced_code(responses[i].value().text);
        if (code && !trim_copy(*code).empty())
            return KernelSource{kernel.task_id, *code, kernel.description};
        drops.push_back("sample " + std::to_string(i) + ": no fenced code block");
    }
    if (all_failed(responses))
        return AgentError{AgentError::Kind::Provider, aggregate_error(responses).message, drops};
    return AgentError{AgentError::Kind::RevisionFailure, "no parseable revised kernel", drops};
}

Result<std::string, AgentError> Agents::analyze_profile(const PerfMetrics& metrics,
                                                        const GuidanceTags& g) const {
    assert(metrics.correct);
    std::ostringstream block;
    for (const auto& name : g.metric_focus) {
        std::optional<double> value;
        if (name == "sm_throughput_pct") value = metrics.sm_throughput_pct;
        else if (name == "mem_throughput_pct") value = metrics.mem_throughput_pct;
        else if (name == "dram_throughput_pct") value = metrics.dram_throughput_pct;
        else if (name == "l2_hit_rate_pct") value = metrics.l2_hit_rate_pct;
        if (value) block << name << ": " << *value << "\n";
    }
    if (metrics.avg_latency_ms) block << "avg_latency_ms: " << *metrics.avg_latency_ms << "\n";

    auto rendered = templates_.get(kRoleProfileAnalyst, g.zone)
                        .render({{"roofline_preamble", g.prompt_preamble},
                                 {"metrics_block", block.str()}});
    if (!rendered) return AgentError{AgentError::Kind::Template, rendered.error().message, {}};

    auto response = provider_.complete(rendered.value());
    if (!response.ok())
        return AgentError{AgentError::Kind::Provider,
                          "profile analysis call failed: " + response.error().message, {}};
    return response.value().text;
}

Result<std::pair<double, double>, AgentError> Agents::roofline_prophet(
    const std::string& task_description, const GpuSpec& spec) const {
    std::ostringstream spec_text;
    spec_text << spec.name << ", peak bandwidth " << spec.peak_bandwidth_bytes_per_s
              << " bytes/s, units:";
    for (const auto& unit : spec.units)
        spec_text << " " << unit.name << "=" << unit.peak_flops_per_s << " flops/s";

    auto rendered = templates_.get(kRoleRooflineProphet, RooflineZone::MiddleZone)
                        .render({{"task_description", task_description},
                                 {"gpu_spec", spec_text.str()}});
    if (!rendered) return AgentError{AgentError::Kind::Template, rendered.error().message, {}};

    auto response = provider_.complete(rendered.value());
    if (!response.ok())
        return AgentError{AgentError::Kind::Provider,
                          "prophet call failed: " + response.error().message, {}};
    auto parsed = parse_flops_bytes(response.value().text);
    if (!parsed)
        return AgentError{AgentError::Kind::ProphetFailure,
                          "prophet response had no parseable flops/bytes answer",
                          {response.value().text}};
    return *parsed;
}

} // namespace kevo
