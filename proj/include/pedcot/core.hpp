#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pedcot/errors.hpp"

namespace pedcot {

// ── Pedagogical principles ──────────────────────────────────────────

// The three principles, in Bloom order: Remember, Understand, Apply.
enum class PrincipleId : int {
    Concepts = 1,     // mathematical concepts
    Approaches = 2,   // problem-solving approaches
    Calculations = 3, // calculations
};

inline constexpr PrincipleId kAllPrinciples[] = {
    PrincipleId::Concepts, PrincipleId::Approaches, PrincipleId::Calculations};

inline int principle_number(PrincipleId p) { return static_cast<int>(p); }

inline PrincipleId principle_from_number(int k) {
    if (k < 1 || k > 3) {
        throw InvalidInput("principle number must be 1, 2 or 3, got " + std::to_string(k));
    }
    return static_cast<PrincipleId>(k);
}

// Keyword phrase that anchors principle k in prompts and responses.
inline const char* principle_keyword(PrincipleId p) {
    switch (p) {
        case PrincipleId::Concepts: return "mathematical concepts";
        case PrincipleId::Approaches: return "problem-solving approaches";
        case PrincipleId::Calculations: return "calculations";
    }
    return "";
}

// Four-valued per-principle verdict.
enum class PrincipleLabel {
    CorrectAndAligned,
    ReasonableButIncomplete,
    ContradictionFound,
    NothingExtracted,
};

inline const char* to_string(PrincipleLabel label) {
    switch (label) {
        case PrincipleLabel::CorrectAndAligned: return "correct-and-aligned";
        case PrincipleLabel::ReasonableButIncomplete: return "reasonable-but-incomplete";
        case PrincipleLabel::ContradictionFound: return "contradiction-found";
        case PrincipleLabel::NothingExtracted: return "nothing-extracted";
    }
    return "";
}

inline PrincipleLabel principle_label_from_string(const std::string& s) {
    if (s == "correct-and-aligned") return PrincipleLabel::CorrectAndAligned;
    if (s == "reasonable-but-incomplete") return PrincipleLabel::ReasonableButIncomplete;
    if (s == "contradiction-found") return PrincipleLabel::ContradictionFound;
    if (s == "nothing-extracted") return PrincipleLabel::NothingExtracted;
    throw InvalidInput("unknown principle label: " + s);
}

using PrincipleLabels = std::map<PrincipleId, PrincipleLabel>;
using PrincipleTexts = std::map<PrincipleId, std::string>;

// ── Traces ──────────────────────────────────────────────────────────

struct Question {
    std::string id;
    std::string text; // full problem statement, non-empty
};

struct AnswerStep {
    int index = 0;    // 1-based
    std::string text; // non-empty
    std::optional<int> gold_step_label; // 1 right / 0 wrong, when annotated
};

// A question plus its ordered answer steps and gold labels.
//
// Invariants (see validate()):
//   - steps non-empty, indices contiguous 1..n
//   - gold_trace_label == 0  <=>  gold_first_mistake present
//   - when all per-step golds exist, the trace gold agrees with them
struct AnswerTrace {
    Question question;
    std::vector<AnswerStep> steps;
    std::optional<int> gold_first_mistake; // 1-based
    int gold_trace_label = 1;              // 1 right / 0 wrong

    int step_count() const { return static_cast<int>(steps.size()); }

    void validate() const;
};

// ── Label aggregation ───────────────────────────────────────────────

// Step label: 1 unless some principle verdict is contradiction-found.
// reasonable-but-incomplete and nothing-extracted never downgrade a step.
inline int aggregate_step_label(const PrincipleLabels& labels) {
    if (labels.empty()) {
        throw InvalidInput("aggregate_step_label: empty principle label map");
    }
    for (const auto& [id, label] : labels) {
        if (label == PrincipleLabel::ContradictionFound) return 0;
    }
    return 1;
}

struct TraceAggregate {
    int label = 1;                          // 1 right / 0 mistake found
    std::optional<int> first_mistake;       // 1-based, present iff label == 0
};

// Trace label: 1 iff every step label is 1; otherwise 0 plus the index of
// the first 0. Step labels are given in step order.
inline TraceAggregate aggregate_trace_label(const std::vector<int>& step_labels) {
    if (step_labels.empty()) {
        throw InvalidInput("aggregate_trace_label: empty step label list");
    }
    for (std::size_t i = 0; i < step_labels.size(); ++i) {
        if (step_labels[i] == 0) {
            return {0, static_cast<int>(i) + 1};
        }
    }
    return {1, std::nullopt};
}

inline void AnswerTrace::validate() const {
    if (question.text.empty()) {
        throw InvalidInput("trace " + question.id + ": question text is empty");
    }
    if (steps.empty()) {
        throw InvalidInput("trace " + question.id + ": no answer steps");
    }
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (steps[i].index != static_cast<int>(i) + 1) {
            throw InvalidInput("trace " + question.id + ": step indices not contiguous at position " +
                               std::to_string(i + 1));
        }
        if (steps[i].text.empty()) {
            throw InvalidInput("trace " + question.id + ": step " + std::to_string(i + 1) +
                               " has empty text");
        }
    }
    const bool has_mistake = gold_first_mistake.has_value();
    if ((gold_trace_label == 0) != has_mistake) {
        throw InvalidInput("trace " + question.id +
                           ": gold_trace_label and gold_first_mistake disagree");
    }
    if (has_mistake && (*gold_first_mistake < 1 || *gold_first_mistake > step_count())) {
        throw InvalidInput("trace " + question.id + ": gold_first_mistake " +
                           std::to_string(*gold_first_mistake) + " out of range 1.." +
                           std::to_string(step_count()));
    }
    const bool all_golds = std::all_of(steps.begin(), steps.end(), [](const AnswerStep& s) {
        return s.gold_step_label.has_value();
    });
    if (all_golds) {
        std::vector<int> golds;
        golds.reserve(steps.size());
        for (const auto& s : steps) golds.push_back(*s.gold_step_label);
        const TraceAggregate agg = aggregate_trace_label(golds);
        if (agg.label != gold_trace_label || agg.first_mistake != gold_first_mistake) {
            throw InvalidInput("trace " + question.id +
                               ": gold trace label inconsistent with per-step golds");
        }
    }
}

// ── Stage outputs and verdicts ──────────────────────────────────────

// Stage-1 regenerated content, one segment per active principle.
struct RegeneratedContent {
    PrincipleTexts segments;
    std::string raw;
};

// Stage-2 extracted content; a segment may be empty when nothing was
// extracted for that principle.
struct ExtractedContent {
    PrincipleTexts segments;
    std::string raw;
};

// One prompt/response exchange, kept for audit and replay-cache building.
struct RequestRecord {
    int stage = 1; // 1, 2, or 1 for single-request strategies
    std::string prompt;
    std::string response;
    std::int64_t duration_ms = 0;
};

struct StepVerdict {
    int step_index = 0; // 1-based
    PrincipleLabels principle_labels; // populated for PedCoT-family strategies
    int step_label = 1;
    RegeneratedContent regenerated;
    ExtractedContent extracted;
    int request_count = 0;
    std::vector<RequestRecord> requests;
    // Set when an unparseable response was coerced by policy instead of
    // aggregated from principle labels.
    bool label_forced = false;
};

struct TraceVerdict {
    std::string trace_id;
    int trace_label = 1;
    std::optional<int> predicted_first_mistake; // 1-based, present iff trace_label == 0
    std::vector<StepVerdict> step_verdicts;     // ends at the first predicted mistake
};

} // namespace pedcot
