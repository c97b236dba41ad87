#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pedcot/core.hpp"
#include "pedcot/errors.hpp"

namespace pedcot {

// ── Confusion counts ────────────────────────────────────────────────

// Positive class = gold-correct trace, negative class = gold-mistake trace.
struct ConfusionCounts {
    int tp_pos = 0; // gold correct, predicted correct
    int fn_pos = 0; // gold correct, predicted mistake
    int tn_neg = 0; // gold mistake, predicted mistake
    int fp_neg = 0; // gold mistake, predicted correct

    int n_pos() const { return tp_pos + fn_pos; }
    int n_neg() const { return tn_neg + fp_neg; }
    int total() const { return n_pos() + n_neg(); }
};

// Count trace-level agreement; verdicts and golds must align one-to-one by
// trace id, in order.
inline ConfusionCounts confusion(const std::vector<TraceVerdict>& verdicts,
                                 const std::vector<AnswerTrace>& golds) {
    if (verdicts.size() != golds.size()) {
        throw InvalidInput("confusion: " + std::to_string(verdicts.size()) + " verdicts vs " +
                           std::to_string(golds.size()) + " gold traces");
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        if (verdicts[i].trace_id != golds[i].question.id) {
            throw InvalidInput("confusion: trace id mismatch at position " + std::to_string(i) +
                               ": " + verdicts[i].trace_id + " vs " + golds[i].question.id);
        }
        const bool gold_correct = golds[i].gold_trace_label == 1;
        const bool pred_correct = verdicts[i].trace_label == 1;
        if (gold_correct) {
            (pred_correct ? c.tp_pos : c.fn_pos)++;
        } else {
            (pred_correct ? c.fp_neg : c.tn_neg)++;
        }
    }
    return c;
}

// Strict mistake-finding hit: a gold-correct trace must be predicted fully
// correct; a gold-mistake trace must have its first mistake located at
// exactly the gold step.
inline bool mf_hit(const TraceVerdict& verdict, const AnswerTrace& gold) {
    if (gold.gold_trace_label == 1) return verdict.trace_label == 1;
    return verdict.predicted_first_mistake.has_value() &&
           verdict.predicted_first_mistake == gold.gold_first_mistake;
}

inline int count_mf_hits(const std::vector<TraceVerdict>& verdicts,
                         const std::vector<AnswerTrace>& golds) {
    if (verdicts.size() != golds.size()) {
        throw InvalidInput("count_mf_hits: verdicts and golds differ in length");
    }
    int hits = 0;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        if (mf_hit(verdicts[i], golds[i])) ++hits;
    }
    return hits;
}

// ── Metric computation ──────────────────────────────────────────────

// All values are percentages. Zero-denominator precision/F1 report 0 with
// the matching flag set.
struct MetricsReport {
    double mf_acc = 0;
    double avg_f1 = 0;
    double cls_acc = 0;
    double p_pos = 0, r_pos = 0, f_pos = 0;
    double p_neg = 0, r_neg = 0, f_neg = 0;
    ConfusionCounts confusion;
    int mf_hits = 0;
    int total_traces = 0;
    bool zero_denominator_pos = false;
    bool zero_denominator_neg = false;
};

namespace detail {

struct Prf {
    double p = 0, r = 0, f = 0;
    bool zero_denominator = false;
};

inline Prf precision_recall_f1(int tp, int fp, int fn) {
    Prf out;
    if (tp + fp == 0) {
        out.zero_denominator = true;
    } else {
        out.p = 100.0 * tp / (tp + fp);
    }
    out.r = (tp + fn == 0) ? 0.0 : 100.0 * tp / (tp + fn);
    if (out.p + out.r == 0.0) {
        out.zero_denominator = true;
    } else {
        out.f = 2.0 * out.p * out.r / (out.p + out.r);
    }
    return out;
}

// Half-up rounding to two decimals, matching the tables' rendering.
inline double round2(double x) { return std::floor(x * 100.0 + 0.5) / 100.0; }

inline std::string fmt2(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", round2(x));
    return buf;
}

} // namespace detail

inline MetricsReport compute_metrics(const ConfusionCounts& counts, int mf_hits,
                                     int total_traces) {
    if (counts.tp_pos < 0 || counts.fn_pos < 0 || counts.tn_neg < 0 || counts.fp_neg < 0) {
        throw InvalidInput("compute_metrics: negative confusion counts");
    }
    if (mf_hits < 0 || mf_hits > total_traces) {
        throw InvalidInput("compute_metrics: mf_hits out of range");
    }
    MetricsReport r;
    r.confusion = counts;
    r.mf_hits = mf_hits;
    r.total_traces = total_traces;

    // For the positive class, predicted-positives are tp_pos + fp_neg; for
    // the negative class, predicted-negatives are tn_neg + fn_pos.
    const detail::Prf pos = detail::precision_recall_f1(counts.tp_pos, counts.fp_neg, counts.fn_pos);
    const detail::Prf neg = detail::precision_recall_f1(counts.tn_neg, counts.fn_pos, counts.fp_neg);
    r.p_pos = pos.p;
    r.r_pos = pos.r;
    r.f_pos = pos.f;
    r.zero_denominator_pos = pos.zero_denominator;
    r.p_neg = neg.p;
    r.r_neg = neg.r;
    r.f_neg = neg.f;
    r.zero_denominator_neg = neg.zero_denominator;

    const int n = counts.total();
    r.cls_acc = n == 0 ? 0.0 : 100.0 * (counts.tp_pos + counts.tn_neg) / n;
    // Support-weighted average of the unrounded per-class F1 scores.
    r.avg_f1 = n == 0 ? 0.0 : (r.f_pos * counts.n_pos() + r.f_neg * counts.n_neg()) / n;
    r.mf_acc = total_traces == 0 ? 0.0 : 100.0 * mf_hits / total_traces;
    return r;
}

inline MetricsReport score_run(const std::vector<TraceVerdict>& verdicts,
                               const std::vector<AnswerTrace>& golds) {
    return compute_metrics(confusion(verdicts, golds), count_mf_hits(verdicts, golds),
                           static_cast<int>(verdicts.size()));
}

// ── Rendering ───────────────────────────────────────────────────────

inline nlohmann::json metrics_to_json(const MetricsReport& r) {
    return {
        {"mf_acc", detail::round2(r.mf_acc)},
        {"avg_f1", detail::round2(r.avg_f1)},
        {"cls_acc", detail::round2(r.cls_acc)},
        {"p_pos", detail::round2(r.p_pos)},
        {"r_pos", detail::round2(r.r_pos)},
        {"f_pos", detail::round2(r.f_pos)},
        {"p_neg", detail::round2(r.p_neg)},
        {"r_neg", detail::round2(r.r_neg)},
        {"f_neg", detail::round2(r.f_neg)},
        {"confusion",
         {{"tp_pos", r.confusion.tp_pos},
          {"fn_pos", r.confusion.fn_pos},
          {"tn_neg", r.confusion.tn_neg},
          {"fp_neg", r.confusion.fp_neg},
          {"n_pos", r.confusion.n_pos()},
          {"n_neg", r.confusion.n_neg()}}},
        {"mf_hits", r.mf_hits},
        {"total_traces", r.total_traces},
        {"zero_denominator_pos", r.zero_denominator_pos},
        {"zero_denominator_neg", r.zero_denominator_neg},
    };
}

// Aligned-column table in the order MF. Acc., Avg. F1, Cls. Acc., P+, R+,
// F+, P-, R-, F-.
inline std::string metrics_table(const MetricsReport& r, const std::string& label) {
    static const char* columns[] = {"MF. Acc.", "Avg. F1", "Cls. Acc.", "P+", "R+",
                                    "F+",       "P-",      "R-",        "F-"};
    const double values[] = {r.mf_acc, r.avg_f1, r.cls_acc, r.p_pos, r.r_pos,
                             r.f_pos,  r.p_neg,  r.r_neg,   r.f_neg};
    const std::string header = label.empty() ? "run" : label;
    std::string out;
    out += header;
    std::string second(header.size(), ' ');
    for (std::size_t i = 0; i < 9; ++i) {
        const std::string v = detail::fmt2(values[i]);
        const std::size_t w = std::max(std::string(columns[i]).size(), v.size()) + 2;
        std::string c = columns[i];
        out += std::string(w - c.size(), ' ') + c;
        second += std::string(w - v.size(), ' ') + v;
    }
    out += '\n';
    out += second;
    out += '\n';
    return out;
}

} // namespace pedcot
