#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pedcot/core.hpp"
#include "pedcot/errors.hpp"
#include "pedcot/parser.hpp"

namespace pedcot {

// ── Strategies ──────────────────────────────────────────────────────

enum class StrategyId {
    PedCoT,
    PedCoTOneStage,
    DirectStep,
    VanillaTwoStage,
    ZeroShotCoT,
};

inline const char* to_string(StrategyId s) {
    switch (s) {
        case StrategyId::PedCoT: return "pedcot";
        case StrategyId::PedCoTOneStage: return "pedcot-one-stage";
        case StrategyId::DirectStep: return "direct-step";
        case StrategyId::VanillaTwoStage: return "vanilla-two-stage";
        case StrategyId::ZeroShotCoT: return "zero-shot-cot";
    }
    return "";
}

inline StrategyId strategy_from_string(const std::string& s) {
    if (s == "pedcot") return StrategyId::PedCoT;
    if (s == "pedcot-one-stage") return StrategyId::PedCoTOneStage;
    if (s == "direct-step") return StrategyId::DirectStep;
    if (s == "vanilla-two-stage") return StrategyId::VanillaTwoStage;
    if (s == "zero-shot-cot") return StrategyId::ZeroShotCoT;
    throw InvalidInput("unknown strategy: " + s);
}

inline constexpr StrategyId kBaselineStrategies[] = {
    StrategyId::PedCoTOneStage, StrategyId::DirectStep, StrategyId::VanillaTwoStage,
    StrategyId::ZeroShotCoT};

// ── Default bundle ──────────────────────────────────────────────────
//
// Slot syntax is double braces; per-principle content sits inside
// {{#principle_k}}...{{/principle_k}} blocks so an ablated principle can be
// removed without touching code. Two-request baselines separate their first
// and follow-up prompt with a line holding only {{followup}}.

namespace default_templates {

inline constexpr const char* kStage1 =
    R"(You are a mathematics teacher reviewing a student's step-by-step solution.

Problem:
{{question}}

Steps the student has written so far:
{{previous_steps}}

Without guessing the step the student actually wrote next, describe what the expected next step of a correct solution should involve. Answer as a numbered list, one item per part named below, in increasing order, separating items with a blank line:
{{#principle_1}}
1. The expected **mathematical concepts**: state the definitions, rules or theorems the next step relies on.
{{/principle_1}}{{#principle_2}}
2. The expected **problem-solving approaches**: give the key analysis and the plan the next step should follow.
{{/principle_2}}{{#principle_3}}
3. The expected **calculations**: set up the expressions the next step should evaluate and compute their results.
{{/principle_3}}
Do not mention, quote or guess the step the student actually wrote next.
)";

inline constexpr const char* kStage2 =
    R"(You are a mathematics teacher checking the most recent step of a student's step-by-step solution.

Problem:
{{question}}

The student's steps so far; the last one is the current step under review:
{{steps}}

Before seeing the current step, a reference analysis predicted what it should involve:
{{#principle_1}}
Part 1 - expected **mathematical concepts**:
{{regenerated_1}}
{{/principle_1}}{{#principle_2}}
Part 2 - expected **problem-solving approaches**:
{{regenerated_2}}
{{/principle_2}}{{#principle_3}}
Part 3 - expected **calculations**:
{{regenerated_3}}
{{/principle_3}}
Now judge only the current step; earlier steps are context and are assumed already reviewed:
{{#principle_1}}
- Extract the mathematical concepts the current step actually uses and compare them with Part 1.
{{/principle_1}}{{#principle_2}}
- Extract the problem-solving approaches the current step actually takes and compare them with Part 2.
{{/principle_2}}{{#principle_3}}
- Extract the calculations the current step actually performs, redo them yourself, and compare the results with Part 3.
{{/principle_3}}
Conclude with exactly one verdict line per part, each on its own line, with nothing after them:
{{#principle_1}}
Principle 1: <verdict>
{{/principle_1}}{{#principle_2}}
Principle 2: <verdict>
{{/principle_2}}{{#principle_3}}
Principle 3: <verdict>
{{/principle_3}}
Each <verdict> must be exactly one of: correct-and-aligned (the extracted content is correct and aligned with the expected part), reasonable-but-incomplete (partially correct but not completely aligned), contradiction-found (totally contrary to the expected part), nothing-extracted (no related content in the current step).
)";

inline constexpr const char* kDirectStep =
    R"(Problem:
{{question}}

Solution steps so far:
{{steps}}

Is step {{step_index}} correct? Answer with a single word: yes or no.
)";

inline constexpr const char* kVanillaTwoStage =
    R"(Problem:
{{question}}

Solution steps so far:
{{steps}}

Analyze whether step {{step_index}} is correct.
{{followup}}
Given your analysis above, answer with a single word, yes or no: is step {{step_index}} correct?
)";

inline constexpr const char* kZeroShotCoT =
    R"(Problem:
{{question}}

Solution steps so far:
{{steps}}

Is step {{step_index}} correct? Let's think step by step.
{{followup}}
Given the reasoning above, answer with a single word, yes or no: is step {{step_index}} correct?
)";

inline constexpr const char* kPedCoTOneStage =
    R"(You are a mathematics teacher checking the most recent step of a student's step-by-step solution.

Problem:
{{question}}

Steps the student wrote before the current one:
{{previous_steps}}

The current step under review:
Step {{step_index}}: {{current_step}}

First, set aside the current step and describe what the expected step at this point of a correct solution should involve:
{{#principle_1}}
1. The expected **mathematical concepts** (definitions, rules or theorems).
{{/principle_1}}{{#principle_2}}
2. The expected **problem-solving approaches** (key analysis and plan).
{{/principle_2}}{{#principle_3}}
3. The expected **calculations** (set up the expressions and compute their results).
{{/principle_3}}
Then extract the corresponding content the current step actually contains, compare it with what you expected, and conclude with exactly one verdict line per part, each on its own line, with nothing after them:
{{#principle_1}}
Principle 1: <verdict>
{{/principle_1}}{{#principle_2}}
Principle 2: <verdict>
{{/principle_2}}{{#principle_3}}
Principle 3: <verdict>
{{/principle_3}}
Each <verdict> must be exactly one of: correct-and-aligned, reasonable-but-incomplete, contradiction-found, nothing-extracted.
)";

} // namespace default_templates

// ── Template set ────────────────────────────────────────────────────

struct TemplateSet {
    std::string stage1;
    std::string stage2;
    std::map<StrategyId, std::string> baselines;
};

enum class PromptStage { Single = 0, Stage1 = 1, Stage2 = 2 };

inline const char* to_string(PromptStage s) {
    switch (s) {
        case PromptStage::Single: return "single";
        case PromptStage::Stage1: return "1";
        case PromptStage::Stage2: return "2";
    }
    return "";
}

struct RenderedPrompt {
    PromptStage stage = PromptStage::Single;
    StrategyId strategy = StrategyId::PedCoT;
    std::string text;
    std::set<PrincipleId> active;
};

namespace detail {

struct Marker {
    std::string name; // text between the braces
    std::size_t begin = 0;
    std::size_t end = 0; // one past "}}"
};

inline std::vector<Marker> scan_markers(const std::string& text) {
    std::vector<Marker> markers;
    std::size_t pos = 0;
    while ((pos = text.find("{{", pos)) != std::string::npos) {
        const std::size_t close = text.find("}}", pos + 2);
        if (close == std::string::npos) {
            throw TemplateError(text.substr(pos, 24), "unterminated slot marker");
        }
        markers.push_back({text.substr(pos + 2, close - pos - 2), pos, close + 2});
        pos = close + 2;
    }
    return markers;
}

// Remove inactive principle blocks and unwrap active ones.
inline std::string filter_principle_blocks(const std::string& text,
                                           const std::set<PrincipleId>& active) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t open = text.find("{{#principle_", pos);
        if (open == std::string::npos) {
            out.append(text, pos, std::string::npos);
            break;
        }
        out.append(text, pos, open - pos);
        const std::size_t open_end = text.find("}}", open);
        if (open_end == std::string::npos) {
            throw TemplateError(text.substr(open, 24), "unterminated block marker");
        }
        const std::string block_name = text.substr(open + 3, open_end - open - 3); // principle_k
        const std::string close_marker = "{{/" + block_name + "}}";
        const std::size_t close = text.find(close_marker, open_end + 2);
        if (close == std::string::npos) {
            throw TemplateError(block_name, "block is never closed");
        }
        const char digit = block_name.back();
        if (digit < '1' || digit > '3') {
            throw TemplateError(block_name, "block name must end in 1, 2 or 3");
        }
        if (active.count(principle_from_number(digit - '0')) > 0) {
            out.append(text, open_end + 2, close - open_end - 2);
        }
        pos = close + close_marker.size();
    }
    return out;
}

inline std::string substitute_slots(const std::string& text,
                                    const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t open = text.find("{{", pos);
        if (open == std::string::npos) {
            out.append(text, pos, std::string::npos);
            break;
        }
        out.append(text, pos, open - pos);
        const std::size_t close = text.find("}}", open);
        const std::string name = text.substr(open + 2, close - open - 2);
        const auto it = values.find(name);
        if (it == values.end()) {
            throw TemplateError(name, "no value for slot");
        }
        out.append(it->second);
        pos = close + 2;
    }
    return out;
}

inline bool is_block_marker(const std::string& name) {
    return !name.empty() && (name[0] == '#' || name[0] == '/');
}

// Structural validation of one template text: balanced non-nested principle
// blocks, required slots exactly once, optional slots at most once, no
// unknown markers.
inline void validate_template(const std::string& entry, const std::string& text,
                              const std::set<std::string>& required,
                              const std::set<std::string>& optional_slots,
                              bool expect_blocks) {
    std::map<std::string, int> counts;
    int open_block = 0;
    std::string open_name;
    for (const Marker& m : scan_markers(text)) {
        if (is_block_marker(m.name)) {
            const std::string body = m.name.substr(1);
            if (body.rfind("principle_", 0) != 0 || body.size() != 11) {
                throw TemplateError(m.name, entry + ": unknown block marker");
            }
            if (m.name[0] == '#') {
                if (open_block) throw TemplateError(m.name, entry + ": nested block");
                open_block = 1;
                open_name = body;
            } else {
                if (!open_block || body != open_name) {
                    throw TemplateError(m.name, entry + ": unbalanced block");
                }
                open_block = 0;
            }
            counts[m.name]++;
            continue;
        }
        if (required.count(m.name) == 0 && optional_slots.count(m.name) == 0) {
            throw TemplateError(m.name, entry + ": unknown slot");
        }
        counts[m.name]++;
    }
    if (open_block) throw TemplateError("#" + open_name, entry + ": block is never closed");
    for (const std::string& slot : required) {
        const int n = counts.count(slot) ? counts[slot] : 0;
        if (n == 0) throw TemplateError(slot, entry + ": required slot missing");
        if (n > 1) throw TemplateError(slot, entry + ": slot must appear exactly once");
    }
    for (const std::string& slot : optional_slots) {
        if (counts.count(slot) && counts[slot] > 1) {
            throw TemplateError(slot, entry + ": slot must appear at most once");
        }
    }
    if (expect_blocks) {
        // A principle may own several block segments (content, comparison,
        // verdict line); ablation removes them together. At least one must
        // exist per principle.
        for (PrincipleId p : kAllPrinciples) {
            const std::string open = "#principle_" + std::to_string(principle_number(p));
            if (counts.count(open) == 0) {
                throw TemplateError(open, entry + ": principle block missing");
            }
        }
    }
}

// A stage-2-shaped template must keep each {{regenerated_k}} inside block k
// so removing the block removes the slot.
inline void validate_regenerated_inside_blocks(const std::string& entry, const std::string& text) {
    for (PrincipleId p : kAllPrinciples) {
        const int k = principle_number(p);
        std::set<PrincipleId> without(std::begin(kAllPrinciples), std::end(kAllPrinciples));
        without.erase(p);
        const std::string filtered = filter_principle_blocks(text, without);
        const std::string slot = "{{regenerated_" + std::to_string(k) + "}}";
        if (filtered.find(slot) != std::string::npos) {
            throw TemplateError("regenerated_" + std::to_string(k),
                                entry + ": slot must live inside its principle block");
        }
    }
}

inline void validate_verdict_instruction(const std::string& entry, const std::string& text) {
    for (PrincipleLabel label :
         {PrincipleLabel::CorrectAndAligned, PrincipleLabel::ReasonableButIncomplete,
          PrincipleLabel::ContradictionFound, PrincipleLabel::NothingExtracted}) {
        if (text.find(to_string(label)) == std::string::npos) {
            throw TemplateError(to_string(label), entry + ": verdict-format instruction "
                                                          "must name every label");
        }
    }
}

inline constexpr const char* kFollowupMarker = "{{followup}}";

inline std::vector<std::string> split_followup(const std::string& text) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (true) {
        const std::size_t m = text.find(kFollowupMarker, pos);
        if (m == std::string::npos) {
            parts.push_back(text.substr(pos));
            return parts;
        }
        parts.push_back(text.substr(pos, m - pos));
        pos = m + std::string(kFollowupMarker).size();
        if (pos < text.size() && text[pos] == '\n') ++pos; // marker owns its line
    }
}

} // namespace detail

// ── Loading and validation ──────────────────────────────────────────

// A bundle maps entry names ("stage1", "stage2", "baselines/<strategy>") to
// template text. Entries not present fall back to the built-in defaults, so
// a user bundle may override just one file.
using TemplateBundle = std::map<std::string, std::string>;

namespace detail {

inline void validate_template_set(const TemplateSet& t) {
    validate_template("stage1", t.stage1, {"question", "previous_steps"}, {}, true);

    validate_template("stage2", t.stage2, {"question", "steps"},
                      {"regenerated_1", "regenerated_2", "regenerated_3"}, true);
    for (PrincipleId p : kAllPrinciples) {
        const std::string slot = "regenerated_" + std::to_string(principle_number(p));
        if (t.stage2.find("{{" + slot + "}}") == std::string::npos) {
            throw TemplateError(slot, "stage2: required slot missing");
        }
    }
    validate_regenerated_inside_blocks("stage2", t.stage2);
    validate_verdict_instruction("stage2", t.stage2);

    for (StrategyId s : kBaselineStrategies) {
        const auto it = t.baselines.find(s);
        if (it == t.baselines.end()) {
            throw TemplateError(std::string("baselines/") + to_string(s), "template missing");
        }
        const std::string entry = std::string("baselines/") + to_string(s);
        const std::vector<std::string> parts = split_followup(it->second);
        const bool two_round =
            s == StrategyId::VanillaTwoStage || s == StrategyId::ZeroShotCoT;
        if (parts.size() != (two_round ? 2u : 1u)) {
            throw TemplateError(entry, two_round ? "expected exactly one {{followup}} marker"
                                                 : "unexpected {{followup}} marker");
        }
        if (s == StrategyId::PedCoTOneStage) {
            validate_template(entry, parts[0],
                              {"question", "previous_steps", "current_step"}, {"step_index"},
                              true);
            validate_verdict_instruction(entry, parts[0]);
        } else {
            validate_template(entry, parts[0], {"question", "steps"}, {"step_index"}, false);
            if (two_round) {
                validate_template(entry + " follow-up", parts[1], {}, {"step_index"}, false);
            }
        }
    }
}

} // namespace detail

// Validate an assembled set directly (load_templates runs this for you).
inline void validate_templates(const TemplateSet& t) { detail::validate_template_set(t); }

inline TemplateBundle default_bundle() {
    using namespace default_templates;
    return {
        {"stage1", kStage1},
        {"stage2", kStage2},
        {"baselines/direct-step", kDirectStep},
        {"baselines/vanilla-two-stage", kVanillaTwoStage},
        {"baselines/zero-shot-cot", kZeroShotCoT},
        {"baselines/pedcot-one-stage", kPedCoTOneStage},
    };
}

// Build a validated TemplateSet from a bundle; entries absent from the
// bundle use the built-in defaults.
inline TemplateSet load_templates(const TemplateBundle& bundle) {
    TemplateBundle merged = default_bundle();
    for (const auto& [k, v] : bundle) merged[k] = v;

    TemplateSet t;
    t.stage1 = merged.at("stage1");
    t.stage2 = merged.at("stage2");
    for (StrategyId s : kBaselineStrategies) {
        const std::string key = std::string("baselines/") + to_string(s);
        if (const auto it = merged.find(key); it != merged.end()) {
            t.baselines[s] = it->second;
        }
    }
    detail::validate_template_set(t);
    return t;
}

inline TemplateSet load_templates() { return load_templates(TemplateBundle{}); }

// Read a bundle directory (stage1.txt, stage2.txt, baselines/<strategy>.txt).
// Files that exist override the defaults; missing files fall back.
inline TemplateSet load_templates_dir(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw TemplateError(dir.string(), "template bundle directory not found");
    }
    const auto read_file = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    TemplateBundle bundle;
    if (fs::exists(dir / "stage1.txt")) bundle["stage1"] = read_file(dir / "stage1.txt");
    if (fs::exists(dir / "stage2.txt")) bundle["stage2"] = read_file(dir / "stage2.txt");
    for (StrategyId s : kBaselineStrategies) {
        const fs::path p = dir / "baselines" / (std::string(to_string(s)) + ".txt");
        if (fs::exists(p)) bundle[std::string("baselines/") + to_string(s)] = read_file(p);
    }
    return load_templates(bundle);
}

// ── Rendering ───────────────────────────────────────────────────────

namespace detail {

inline std::string format_steps(const std::vector<AnswerStep>& steps, std::size_t count) {
    if (count == 0) return "(no previous steps)";
    std::string out;
    for (std::size_t i = 0; i < count && i < steps.size(); ++i) {
        if (i) out.push_back('\n');
        out += "Step " + std::to_string(steps[i].index) + ": " + steps[i].text;
    }
    return out;
}

inline std::string render(const std::string& tpl, const std::set<PrincipleId>& active,
                          const std::map<std::string, std::string>& values) {
    const std::string body = filter_principle_blocks(tpl, active);
    std::string text = substitute_slots(body, values);
    if (text.find("{{") != std::string::npos || text.find("}}") != std::string::npos) {
        throw TemplateError(text.substr(text.find("{{"), 24), "unsubstituted slot remains");
    }
    return text;
}

} // namespace detail

// Stage-1 prompt over the question and the steps before the one under
// review. The current step never appears here.
inline RenderedPrompt render_stage1(const Question& q,
                                    const std::vector<AnswerStep>& previous_steps,
                                    const TemplateSet& t, const std::set<PrincipleId>& active) {
    if (active.empty()) throw InvalidInput("render_stage1: no active principles");
    RenderedPrompt p;
    p.stage = PromptStage::Stage1;
    p.strategy = StrategyId::PedCoT;
    p.active = active;
    p.text = detail::render(t.stage1, active,
                            {{"question", q.text},
                             {"previous_steps",
                              detail::format_steps(previous_steps, previous_steps.size())}});
    return p;
}

// Stage-2 prompt over the steps through the current one plus the Stage-1
// regenerated content for every active principle.
inline RenderedPrompt render_stage2(const Question& q, const std::vector<AnswerStep>& steps,
                                    const RegeneratedContent& g, const TemplateSet& t,
                                    const std::set<PrincipleId>& active) {
    if (active.empty()) throw InvalidInput("render_stage2: no active principles");
    if (steps.empty()) throw InvalidInput("render_stage2: steps must include the current step");
    std::map<std::string, std::string> values = {
        {"question", q.text}, {"steps", detail::format_steps(steps, steps.size())}};
    for (PrincipleId p : active) {
        const auto it = g.segments.find(p);
        if (it == g.segments.end()) {
            throw InvalidInput("render_stage2: missing regenerated segment for principle " +
                               std::to_string(principle_number(p)));
        }
        values["regenerated_" + std::to_string(principle_number(p))] = it->second;
    }
    RenderedPrompt p;
    p.stage = PromptStage::Stage2;
    p.strategy = StrategyId::PedCoT;
    p.active = active;
    p.text = detail::render(t.stage2, active, values);
    return p;
}

// Baseline prompts for step i of the given trace steps. Two-request
// baselines return their follow-up as a second prompt; the pipeline sends it
// after the first response.
inline std::vector<RenderedPrompt> render_baseline(
    StrategyId strategy, const Question& q, const std::vector<AnswerStep>& steps, int i,
    const TemplateSet& t,
    const std::set<PrincipleId>& active = {PrincipleId::Concepts, PrincipleId::Approaches,
                                           PrincipleId::Calculations}) {
    if (strategy == StrategyId::PedCoT) {
        throw InvalidInput("render_baseline: pedcot is the two-stage strategy, not a baseline");
    }
    if (i < 1 || i > static_cast<int>(steps.size())) {
        throw InvalidInput("render_baseline: step index " + std::to_string(i) + " out of range");
    }
    const auto it = t.baselines.find(strategy);
    if (it == t.baselines.end()) {
        throw InvalidInput(std::string("render_baseline: no template for strategy ") +
                           to_string(strategy));
    }

    std::map<std::string, std::string> values = {
        {"question", q.text},
        {"steps", detail::format_steps(steps, static_cast<std::size_t>(i))},
        {"step_index", std::to_string(i)}};
    std::set<PrincipleId> effective = active;
    if (strategy == StrategyId::PedCoTOneStage) {
        if (active.empty()) throw InvalidInput("render_baseline: no active principles");
        values["previous_steps"] =
            detail::format_steps(steps, static_cast<std::size_t>(i) - 1);
        values["current_step"] = steps[static_cast<std::size_t>(i) - 1].text;
    } else {
        effective = {PrincipleId::Concepts, PrincipleId::Approaches, PrincipleId::Calculations};
    }

    std::vector<RenderedPrompt> prompts;
    const std::vector<std::string> parts = detail::split_followup(it->second);
    for (std::size_t n = 0; n < parts.size(); ++n) {
        RenderedPrompt p;
        p.strategy = strategy;
        p.active = active;
        p.stage = parts.size() == 1 ? PromptStage::Single
                  : n == 0          ? PromptStage::Stage1
                                    : PromptStage::Stage2;
        p.text = detail::render(parts[n], effective, values);
        prompts.push_back(std::move(p));
    }
    return prompts;
}

} // namespace pedcot
