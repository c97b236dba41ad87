#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "pedcot/core.hpp"
#include "pedcot/errors.hpp"
#include "pedcot/llm.hpp"
#include "pedcot/parser.hpp"
#include "pedcot/templates.hpp"

namespace pedcot {

// ── Run configuration ───────────────────────────────────────────────

enum class OnParseFailure { Fail, RetryThenFail, TreatCorrect, TreatMistake };

inline const char* to_string(OnParseFailure p) {
    switch (p) {
        case OnParseFailure::Fail: return "fail";
        case OnParseFailure::RetryThenFail: return "retry_then_fail";
        case OnParseFailure::TreatCorrect: return "treat_correct";
        case OnParseFailure::TreatMistake: return "treat_mistake";
    }
    return "";
}

inline OnParseFailure parse_failure_policy_from_string(const std::string& s) {
    if (s == "fail") return OnParseFailure::Fail;
    if (s == "retry_then_fail") return OnParseFailure::RetryThenFail;
    if (s == "treat_correct") return OnParseFailure::TreatCorrect;
    if (s == "treat_mistake") return OnParseFailure::TreatMistake;
    throw InvalidInput("unknown parse-failure policy: " + s);
}

struct RunConfig {
    StrategyId strategy = StrategyId::PedCoT;
    std::set<PrincipleId> active_principles = {PrincipleId::Concepts, PrincipleId::Approaches,
                                               PrincipleId::Calculations};
    ModelConfig model;
    Mode mode = Mode::Mock;
    int parallel_traces = 1;
    OnParseFailure on_parse_failure = OnParseFailure::RetryThenFail;

    void validate() const {
        const bool pedcot_family =
            strategy == StrategyId::PedCoT || strategy == StrategyId::PedCoTOneStage;
        if (pedcot_family && active_principles.empty()) {
            throw InvalidInput("PedCoT strategies require at least one active principle");
        }
        if (parallel_traces < 1) throw InvalidInput("parallel_traces must be positive");
    }
};

// Human-readable run label, e.g. "PedCoT -Principle 2" for an ablated run.
inline std::string run_label(const RunConfig& cfg) {
    std::string label;
    switch (cfg.strategy) {
        case StrategyId::PedCoT: label = "PedCoT"; break;
        case StrategyId::PedCoTOneStage: label = "PedCoT One-Stage"; break;
        case StrategyId::DirectStep: label = "Direct-Step"; break;
        case StrategyId::VanillaTwoStage: label = "Vanilla Two-Stage"; break;
        case StrategyId::ZeroShotCoT: label = "Zero-shot CoT"; break;
    }
    if (cfg.strategy == StrategyId::PedCoT || cfg.strategy == StrategyId::PedCoTOneStage) {
        for (PrincipleId p : kAllPrinciples) {
            if (cfg.active_principles.count(p) == 0) {
                label += " -Principle " + std::to_string(principle_number(p));
            }
        }
    }
    return label;
}

struct TraceFailure {
    std::string trace_id;
    int step_index = 0; // step being evaluated when the failure hit, 0 if n/a
    std::string message;
};

struct RunResult {
    std::vector<TraceVerdict> verdicts;  // input order, failed traces omitted
    std::vector<TraceFailure> failures;  // input order
    std::uint64_t total_requests = 0;
    std::int64_t wall_ms = 0;
};

// ── Per-step evaluation ─────────────────────────────────────────────

namespace detail {

inline std::string stage1_format_reminder(const std::set<PrincipleId>& active) {
    std::string parts;
    for (PrincipleId p : active) {
        if (!parts.empty()) parts += " ... ";
        parts += std::to_string(principle_number(p)) + ".";
    }
    return "\n\n(Format reminder: answer only as a numbered list \"" + parts +
           " ...\" with one item per requested part, separating items with a blank line.)";
}

inline std::string stage2_format_reminder(const std::set<PrincipleId>& active) {
    std::string lines;
    for (PrincipleId p : active) {
        lines += "\nPrinciple " + std::to_string(principle_number(p)) + ": <verdict>";
    }
    return "\n\n(Format reminder: end your answer with exactly these verdict lines, filling in "
           "one of correct-and-aligned, reasonable-but-incomplete, contradiction-found or "
           "nothing-extracted:" + lines + ")";
}

inline constexpr const char* kYesNoReminder =
    "\n\n(Format reminder: answer with a single word, yes or no.)";

inline std::string timed_complete(Client& client, const std::string& prompt,
                                  const RequestTag& tag, const ModelConfig& model,
                                  std::vector<RequestRecord>& records, int stage) {
    const auto start = std::chrono::steady_clock::now();
    CompletionRequest req{prompt, model, tag};
    std::string response = client.complete(req);
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    records.push_back({stage, prompt, response, elapsed.count()});
    return response;
}

// Coerced verdict for unparseable responses under the treat_* policies.
inline StepVerdict forced_verdict(int step_index, int label,
                                  std::vector<RequestRecord> records, const std::string& raw1,
                                  const std::string& raw2) {
    StepVerdict v;
    v.step_index = step_index;
    v.step_label = label;
    v.label_forced = true;
    v.regenerated.raw = raw1;
    v.extracted.raw = raw2;
    v.request_count = static_cast<int>(records.size());
    v.requests = std::move(records);
    return v;
}

} // namespace detail

// Two-stage PedCoT evaluation of step i: Stage-1 regenerates expected
// content from the question and the steps before i (the current step stays
// unseen), Stage-2 extracts and compares. Two requests per step plus any
// configured parse retries.
inline StepVerdict evaluate_step_pedcot(const AnswerTrace& trace, int i, const RunConfig& cfg,
                                        const TemplateSet& templates, Client& client) {
    if (cfg.strategy != StrategyId::PedCoT) {
        throw InvalidInput("evaluate_step_pedcot: config strategy is not pedcot");
    }
    if (i < 1 || i > trace.step_count()) {
        throw InvalidInput("evaluate_step_pedcot: step index out of range");
    }
    const auto& active = cfg.active_principles;
    std::vector<RequestRecord> records;

    const std::vector<AnswerStep> previous(trace.steps.begin(), trace.steps.begin() + (i - 1));
    const RenderedPrompt p1 = render_stage1(trace.question, previous, templates, active);
    const RequestTag tag1{trace.question.id, i, 1};

    std::string raw1 = detail::timed_complete(client, p1.text, tag1, cfg.model, records, 1);
    RegeneratedContent regenerated;
    try {
        regenerated = split_stage1(raw1, active);
    } catch (const Error&) {
        switch (cfg.on_parse_failure) {
            case OnParseFailure::Fail: throw;
            case OnParseFailure::TreatCorrect:
                return detail::forced_verdict(i, 1, std::move(records), raw1, "");
            case OnParseFailure::TreatMistake:
                return detail::forced_verdict(i, 0, std::move(records), raw1, "");
            case OnParseFailure::RetryThenFail: break;
        }
        raw1 = detail::timed_complete(client, p1.text + detail::stage1_format_reminder(active),
                                      tag1, cfg.model, records, 1);
        regenerated = split_stage1(raw1, active); // still bad -> propagate
    }

    const std::vector<AnswerStep> through(trace.steps.begin(), trace.steps.begin() + i);
    const RenderedPrompt p2 = render_stage2(trace.question, through, regenerated, templates, active);
    const RequestTag tag2{trace.question.id, i, 2};

    std::string raw2 = detail::timed_complete(client, p2.text, tag2, cfg.model, records, 2);
    ParsedVerdict parsed;
    try {
        parsed = parse_stage2(raw2, active);
    } catch (const Error&) {
        switch (cfg.on_parse_failure) {
            case OnParseFailure::Fail: throw;
            case OnParseFailure::TreatCorrect:
                return detail::forced_verdict(i, 1, std::move(records), raw1, raw2);
            case OnParseFailure::TreatMistake:
                return detail::forced_verdict(i, 0, std::move(records), raw1, raw2);
            case OnParseFailure::RetryThenFail: break;
        }
        raw2 = detail::timed_complete(client, p2.text + detail::stage2_format_reminder(active),
                                      tag2, cfg.model, records, 2);
        parsed = parse_stage2(raw2, active);
    }

    StepVerdict v;
    v.step_index = i;
    v.principle_labels = parsed.labels;
    v.step_label = aggregate_step_label(parsed.labels);
    v.regenerated = std::move(regenerated);
    v.extracted = std::move(parsed.extracted);
    v.request_count = static_cast<int>(records.size());
    v.requests = std::move(records);
    return v;
}

// One-stage variant: a single prompt that merges both stages' content and,
// unlike Stage-1, shows the model the current step.
inline StepVerdict evaluate_step_onestage(const AnswerTrace& trace, int i, const RunConfig& cfg,
                                          const TemplateSet& templates, Client& client) {
    if (cfg.strategy != StrategyId::PedCoTOneStage) {
        throw InvalidInput("evaluate_step_onestage: config strategy is not pedcot-one-stage");
    }
    const auto& active = cfg.active_principles;
    const std::vector<RenderedPrompt> prompts =
        render_baseline(StrategyId::PedCoTOneStage, trace.question, trace.steps, i, templates,
                        active);
    const RequestTag tag{trace.question.id, i, 1};
    std::vector<RequestRecord> records;

    std::string raw = detail::timed_complete(client, prompts[0].text, tag, cfg.model, records, 1);
    ParsedVerdict parsed;
    try {
        parsed = parse_stage2(raw, active);
    } catch (const Error&) {
        switch (cfg.on_parse_failure) {
            case OnParseFailure::Fail: throw;
            case OnParseFailure::TreatCorrect:
                return detail::forced_verdict(i, 1, std::move(records), "", raw);
            case OnParseFailure::TreatMistake:
                return detail::forced_verdict(i, 0, std::move(records), "", raw);
            case OnParseFailure::RetryThenFail: break;
        }
        raw = detail::timed_complete(
            client, prompts[0].text + detail::stage2_format_reminder(active), tag, cfg.model,
            records, 1);
        parsed = parse_stage2(raw, active);
    }

    StepVerdict v;
    v.step_index = i;
    v.principle_labels = parsed.labels;
    v.step_label = aggregate_step_label(parsed.labels);
    v.extracted = std::move(parsed.extracted);
    v.request_count = static_cast<int>(records.size());
    v.requests = std::move(records);
    return v;
}

namespace detail {

// Direct-Step and the two-round baselines produce a bare yes/no step label;
// principle labels stay empty for them.
inline StepVerdict evaluate_step_baseline(const AnswerTrace& trace, int i, const RunConfig& cfg,
                                          const TemplateSet& templates, Client& client) {
    const std::vector<RenderedPrompt> prompts =
        render_baseline(cfg.strategy, trace.question, trace.steps, i, templates);
    std::vector<RequestRecord> records;

    std::string label_response;
    RequestTag label_tag{trace.question.id, i, 1};
    std::string label_prompt;
    if (prompts.size() == 1) {
        label_prompt = prompts[0].text;
        label_response = timed_complete(client, label_prompt, label_tag, cfg.model, records, 1);
    } else {
        const std::string analysis =
            timed_complete(client, prompts[0].text, {trace.question.id, i, 1}, cfg.model,
                           records, 1);
        // The wire protocol is one user message per request, so the
        // follow-up embeds the first prompt and the model's analysis.
        label_prompt = prompts[0].text + "\n\n" + analysis + "\n\n" + prompts[1].text;
        label_tag = {trace.question.id, i, 2};
        label_response = timed_complete(client, label_prompt, label_tag, cfg.model, records, 2);
    }

    int label = 0;
    try {
        label = parse_direct_step(label_response);
    } catch (const Error&) {
        switch (cfg.on_parse_failure) {
            case OnParseFailure::Fail: throw;
            case OnParseFailure::TreatCorrect:
                return forced_verdict(i, 1, std::move(records), "", label_response);
            case OnParseFailure::TreatMistake:
                return forced_verdict(i, 0, std::move(records), "", label_response);
            case OnParseFailure::RetryThenFail: break;
        }
        label_response = timed_complete(client, label_prompt + kYesNoReminder, label_tag,
                                        cfg.model, records, label_tag.stage);
        label = parse_direct_step(label_response);
    }

    StepVerdict v;
    v.step_index = i;
    v.step_label = label;
    v.extracted.raw = label_response;
    v.request_count = static_cast<int>(records.size());
    v.requests = std::move(records);
    return v;
}

} // namespace detail

inline StepVerdict evaluate_step(const AnswerTrace& trace, int i, const RunConfig& cfg,
                                 const TemplateSet& templates, Client& client) {
    switch (cfg.strategy) {
        case StrategyId::PedCoT: return evaluate_step_pedcot(trace, i, cfg, templates, client);
        case StrategyId::PedCoTOneStage:
            return evaluate_step_onestage(trace, i, cfg, templates, client);
        case StrategyId::DirectStep:
        case StrategyId::VanillaTwoStage:
        case StrategyId::ZeroShotCoT:
            return detail::evaluate_step_baseline(trace, i, cfg, templates, client);
    }
    throw InvalidInput("evaluate_step: unknown strategy");
}

// ── Trace and dataset evaluation ────────────────────────────────────

// Steps are evaluated strictly in order; the iteration stops at the first
// step labeled 0, which becomes the predicted first mistake.
inline TraceVerdict evaluate_trace(const AnswerTrace& trace, const RunConfig& cfg,
                                   const TemplateSet& templates, Client& client) {
    cfg.validate();
    trace.validate();
    TraceVerdict verdict;
    verdict.trace_id = trace.question.id;

    std::vector<int> step_labels;
    for (int i = 1; i <= trace.step_count(); ++i) {
        StepVerdict step = evaluate_step(trace, i, cfg, templates, client);
        step_labels.push_back(step.step_label);
        verdict.step_verdicts.push_back(std::move(step));
        if (step_labels.back() == 0) break;
    }
    const TraceAggregate agg = aggregate_trace_label(step_labels);
    verdict.trace_label = agg.label;
    verdict.predicted_first_mistake = agg.first_mistake;
    return verdict;
}

// Evaluate traces with at most cfg.parallel_traces workers. Within a trace
// evaluation is sequential (early stop needs the previous verdict); across
// traces order does not matter and results are merged in input order.
inline RunResult evaluate_dataset(const std::vector<AnswerTrace>& traces, const RunConfig& cfg,
                                  const TemplateSet& templates, Client& client) {
    if (traces.empty()) throw InvalidInput("evaluate_dataset: no traces");
    cfg.validate();

    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t requests_before = client.request_count();

    const std::size_t n = traces.size();
    std::vector<std::optional<TraceVerdict>> verdicts(n);
    std::vector<std::optional<TraceFailure>> failures(n);

    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
        while (true) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= n) return;
            try {
                verdicts[idx] = evaluate_trace(traces[idx], cfg, templates, client);
            } catch (const std::exception& e) {
                failures[idx] = TraceFailure{traces[idx].question.id, 0, e.what()};
            }
        }
    };

    const int workers = std::min<int>(cfg.parallel_traces, static_cast<int>(n));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    RunResult result;
    for (std::size_t i = 0; i < n; ++i) {
        if (verdicts[i]) result.verdicts.push_back(std::move(*verdicts[i]));
        if (failures[i]) result.failures.push_back(std::move(*failures[i]));
    }
    result.total_requests = client.request_count() - requests_before;
    result.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    return result;
}

// ── Transcript serialization ────────────────────────────────────────

namespace detail {

inline nlohmann::json principle_texts_to_json(const PrincipleTexts& texts) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [p, text] : texts) j[std::to_string(principle_number(p))] = text;
    return j;
}

inline PrincipleTexts principle_texts_from_json(const nlohmann::json& j) {
    PrincipleTexts out;
    for (const auto& [k, v] : j.items()) {
        out[principle_from_number(std::stoi(k))] = v.get<std::string>();
    }
    return out;
}

} // namespace detail

inline nlohmann::json step_verdict_to_json(const std::string& trace_id, StrategyId strategy,
                                           const StepVerdict& v, bool include_timings = true) {
    nlohmann::json labels = nlohmann::json::object();
    for (const auto& [p, label] : v.principle_labels) {
        labels[std::to_string(principle_number(p))] = to_string(label);
    }
    nlohmann::json requests = nlohmann::json::array();
    for (const RequestRecord& r : v.requests) {
        nlohmann::json rec = {{"stage", r.stage}, {"prompt", r.prompt}, {"response", r.response}};
        if (include_timings) rec["duration_ms"] = r.duration_ms;
        requests.push_back(std::move(rec));
    }
    nlohmann::json j = {{"type", "step"},
                        {"trace_id", trace_id},
                        {"strategy", to_string(strategy)},
                        {"step_index", v.step_index},
                        {"step_label", v.step_label},
                        {"principle_labels", std::move(labels)},
                        {"regenerated", detail::principle_texts_to_json(v.regenerated.segments)},
                        {"extracted", detail::principle_texts_to_json(v.extracted.segments)},
                        {"request_count", v.request_count},
                        {"requests", std::move(requests)}};
    if (v.label_forced) j["label_forced"] = true;
    return j;
}

inline nlohmann::json trace_verdict_summary_json(const TraceVerdict& v) {
    nlohmann::json j = {{"type", "trace"},
                        {"trace_id", v.trace_id},
                        {"trace_label", v.trace_label},
                        {"steps_evaluated", v.step_verdicts.size()}};
    if (v.predicted_first_mistake) {
        j["predicted_first_mistake"] = *v.predicted_first_mistake;
    } else {
        j["predicted_first_mistake"] = nullptr;
    }
    return j;
}

// One JSONL record per evaluated step, then a summary record per trace,
// then one per failure. This stream is the audit trail and the input both
// to offline scoring and to replay-cache building.
inline void write_transcript(const RunResult& result, StrategyId strategy, std::ostream& out) {
    for (const TraceVerdict& v : result.verdicts) {
        for (const StepVerdict& s : v.step_verdicts) {
            out << step_verdict_to_json(v.trace_id, strategy, s).dump() << '\n';
        }
        out << trace_verdict_summary_json(v).dump() << '\n';
    }
    for (const TraceFailure& f : result.failures) {
        out << nlohmann::json{{"type", "failure"},
                              {"trace_id", f.trace_id},
                              {"step_index", f.step_index},
                              {"error", f.message}}
                   .dump()
            << '\n';
    }
}

inline void write_transcript_file(const RunResult& result, StrategyId strategy,
                                  const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + path.string());
    write_transcript(result, strategy, out);
}

// Rebuild verdicts (including step detail) from a transcript stream.
inline RunResult read_transcript(std::istream& in) {
    RunResult result;
    std::map<std::string, TraceVerdict> open; // trace_id -> accumulating verdict
    std::vector<std::string> order;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw LoadError(lineno, std::string("invalid JSON: ") + e.what());
        }
        try {
            const std::string type = j.at("type").get<std::string>();
            if (type == "step") {
                const std::string id = j.at("trace_id").get<std::string>();
                if (open.find(id) == open.end()) {
                    order.push_back(id);
                    open[id].trace_id = id;
                }
                StepVerdict s;
                s.step_index = j.at("step_index").get<int>();
                s.step_label = j.at("step_label").get<int>();
                s.label_forced = j.value("label_forced", false);
                for (const auto& [k, v] : j.at("principle_labels").items()) {
                    s.principle_labels[principle_from_number(std::stoi(k))] =
                        principle_label_from_string(v.get<std::string>());
                }
                s.regenerated.segments = detail::principle_texts_from_json(j.at("regenerated"));
                s.extracted.segments = detail::principle_texts_from_json(j.at("extracted"));
                s.request_count = j.at("request_count").get<int>();
                for (const auto& r : j.at("requests")) {
                    s.requests.push_back({r.at("stage").get<int>(),
                                          r.at("prompt").get<std::string>(),
                                          r.at("response").get<std::string>(),
                                          r.value("duration_ms", std::int64_t{0})});
                }
                open[id].step_verdicts.push_back(std::move(s));
            } else if (type == "trace") {
                const std::string id = j.at("trace_id").get<std::string>();
                if (open.find(id) == open.end()) {
                    order.push_back(id);
                    open[id].trace_id = id;
                }
                open[id].trace_label = j.at("trace_label").get<int>();
                if (!j.at("predicted_first_mistake").is_null()) {
                    open[id].predicted_first_mistake = j.at("predicted_first_mistake").get<int>();
                }
            } else if (type == "failure") {
                result.failures.push_back({j.at("trace_id").get<std::string>(),
                                           j.value("step_index", 0),
                                           j.at("error").get<std::string>()});
            } else {
                throw LoadError(lineno, "unknown record type: " + type);
            }
        } catch (const LoadError&) {
            throw;
        } catch (const nlohmann::json::exception& e) {
            throw LoadError(lineno, std::string("malformed record: ") + e.what());
        }
    }
    for (const std::string& id : order) result.verdicts.push_back(std::move(open[id]));
    return result;
}

inline RunResult read_transcript_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path.string());
    return read_transcript(in);
}

// Canonical result serialization without timings; byte-identical across
// runs that produced the same verdicts (used for determinism checks).
inline std::string results_signature(const RunResult& result, StrategyId strategy) {
    nlohmann::json arr = nlohmann::json::array();
    for (const TraceVerdict& v : result.verdicts) {
        nlohmann::json steps = nlohmann::json::array();
        for (const StepVerdict& s : v.step_verdicts) {
            steps.push_back(step_verdict_to_json(v.trace_id, strategy, s,
                                                 /*include_timings=*/false));
        }
        arr.push_back({{"trace_id", v.trace_id},
                       {"trace_label", v.trace_label},
                       {"predicted_first_mistake",
                        v.predicted_first_mistake ? nlohmann::json(*v.predicted_first_mistake)
                                                  : nlohmann::json(nullptr)},
                       {"steps", std::move(steps)}});
    }
    for (const TraceFailure& f : result.failures) {
        arr.push_back({{"trace_id", f.trace_id}, {"failure", f.message}});
    }
    return arr.dump();
}

} // namespace pedcot
