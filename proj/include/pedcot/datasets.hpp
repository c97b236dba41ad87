#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pedcot/core.hpp"
#include "pedcot/errors.hpp"

namespace pedcot {

// ── Descriptors ─────────────────────────────────────────────────────

enum class DatasetName { BigBenchMistake, Prm800k };

inline const char* to_string(DatasetName d) {
    switch (d) {
        case DatasetName::BigBenchMistake: return "bigbench";
        case DatasetName::Prm800k: return "prm800k";
    }
    return "";
}

inline DatasetName dataset_from_string(const std::string& s) {
    if (s == "bigbench" || s == "bigbench_mistake") return DatasetName::BigBenchMistake;
    if (s == "prm800k") return DatasetName::Prm800k;
    throw InvalidInput("unknown dataset: " + s);
}

struct ExpectedCounts {
    int traces = 0;
    int steps = 0;
    int correct_traces = 0;
};

// Published sizes of the evaluation samples, used for integrity checks.
inline ExpectedCounts expected_counts(DatasetName d) {
    switch (d) {
        case DatasetName::BigBenchMistake: return {300, 1506, 62};
        case DatasetName::Prm800k: return {300, 3736, 85};
    }
    return {};
}

struct DatasetDescriptor {
    DatasetName name = DatasetName::BigBenchMistake;
    std::filesystem::path path;
    std::optional<ExpectedCounts> expected;
};

namespace detail {

inline nlohmann::json parse_jsonl_line(const std::string& line, int lineno) {
    try {
        return nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(lineno, std::string("invalid JSON: ") + e.what());
    }
}

template <typename Fn>
inline void for_each_jsonl_record(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError(0, "cannot open " + path.string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        fn(parse_jsonl_line(line, lineno), lineno);
    }
}

} // namespace detail

// ── BIG-Bench Mistake (math subset) ─────────────────────────────────

// Source records carry the question, ordered step texts, and the mistake
// location (absent/null for correct traces). Locations are 0-based in the
// source; `zero_based_locations = false` flips this for variant exports.
inline std::vector<AnswerTrace> load_bigbench(const std::filesystem::path& path,
                                              bool zero_based_locations = true) {
    std::vector<AnswerTrace> traces;
    detail::for_each_jsonl_record(path, [&](const nlohmann::json& j, int lineno) {
        AnswerTrace trace;
        try {
            if (j.contains("question")) {
                trace.question.text = j.at("question").get<std::string>();
            } else {
                trace.question.text = j.at("input").get<std::string>();
            }
            trace.question.id =
                j.contains("id") ? j.at("id").get<std::string>()
                                 : "bigbench-" + std::to_string(lineno);
            const auto& steps = j.at("steps");
            if (!steps.is_array() || steps.empty()) {
                throw LoadError(lineno, "record has no steps");
            }
            int index = 0;
            for (const auto& s : steps) {
                trace.steps.push_back({++index, s.get<std::string>(), std::nullopt});
            }
            if (j.contains("mistake_index") && !j.at("mistake_index").is_null()) {
                int loc = j.at("mistake_index").get<int>();
                if (zero_based_locations) loc += 1;
                if (loc < 1 || loc > trace.step_count()) {
                    throw LoadError(lineno, "mistake_index out of range");
                }
                trace.gold_first_mistake = loc;
                trace.gold_trace_label = 0;
                for (auto& s : trace.steps) {
                    if (s.index < loc) s.gold_step_label = 1;
                    if (s.index == loc) s.gold_step_label = 0;
                    // labels after the first mistake are unknown in this source
                }
            } else {
                trace.gold_trace_label = 1;
                for (auto& s : trace.steps) s.gold_step_label = 1;
            }
            trace.validate();
        } catch (const LoadError&) {
            throw;
        } catch (const nlohmann::json::exception& e) {
            throw LoadError(lineno, std::string("malformed record: ") + e.what());
        } catch (const InvalidInput& e) {
            throw LoadError(lineno, e.what());
        }
        traces.push_back(std::move(trace));
    });
    return traces;
}

// ── PRM800K sample ──────────────────────────────────────────────────

// Per-step ratings map to binary golds: positive and neutral count as
// right, negative as wrong. Ratings may be the strings
// positive/neutral/negative or the source integers 1/0/-1.
inline int map_prm_rating(const nlohmann::json& rating, int lineno) {
    if (rating.is_string()) {
        const std::string s = rating.get<std::string>();
        if (s == "positive" || s == "neutral") return 1;
        if (s == "negative") return 0;
        throw LoadError(lineno, "unknown rating: " + s);
    }
    if (rating.is_number_integer()) {
        const int v = rating.get<int>();
        if (v == 1 || v == 0) return 1;
        if (v == -1) return 0;
        throw LoadError(lineno, "unknown rating value: " + std::to_string(v));
    }
    throw LoadError(lineno, "rating must be a string or integer");
}

inline bool prm_rating_is_neutral(const nlohmann::json& rating) {
    return (rating.is_string() && rating.get<std::string>() == "neutral") ||
           (rating.is_number_integer() && rating.get<int>() == 0);
}

// `exclude_neutral` drops neutral steps before indexing (sensitivity
// analysis only; off by default).
inline std::vector<AnswerTrace> load_prm800k(const std::filesystem::path& path,
                                             bool exclude_neutral = false) {
    std::vector<AnswerTrace> traces;
    detail::for_each_jsonl_record(path, [&](const nlohmann::json& j, int lineno) {
        AnswerTrace trace;
        try {
            trace.question.text = j.at("question").get<std::string>();
            trace.question.id = j.contains("id") ? j.at("id").get<std::string>()
                                                 : "prm800k-" + std::to_string(lineno);
            const auto& steps = j.at("steps");
            const auto& ratings = j.at("ratings");
            if (!steps.is_array() || steps.empty()) throw LoadError(lineno, "record has no steps");
            if (!ratings.is_array() || ratings.size() != steps.size()) {
                throw LoadError(lineno, "ratings do not align with steps");
            }
            std::vector<int> golds;
            for (std::size_t i = 0; i < steps.size(); ++i) {
                if (exclude_neutral && prm_rating_is_neutral(ratings[i])) continue;
                const int gold = map_prm_rating(ratings[i], lineno);
                trace.steps.push_back({static_cast<int>(trace.steps.size()) + 1,
                                       steps[i].get<std::string>(), gold});
                golds.push_back(gold);
            }
            if (trace.steps.empty()) throw LoadError(lineno, "no steps left after filtering");
            const TraceAggregate agg = aggregate_trace_label(golds);
            trace.gold_trace_label = agg.label;
            trace.gold_first_mistake = agg.first_mistake;
            trace.validate();
        } catch (const LoadError&) {
            throw;
        } catch (const nlohmann::json::exception& e) {
            throw LoadError(lineno, std::string("malformed record: ") + e.what());
        } catch (const InvalidInput& e) {
            throw LoadError(lineno, e.what());
        }
        traces.push_back(std::move(trace));
    });
    return traces;
}

inline std::vector<AnswerTrace> load_dataset(const DatasetDescriptor& d) {
    switch (d.name) {
        case DatasetName::BigBenchMistake: return load_bigbench(d.path);
        case DatasetName::Prm800k: return load_prm800k(d.path);
    }
    throw InvalidInput("unknown dataset");
}

// ── Integrity checks ────────────────────────────────────────────────

struct IntegrityReport {
    ExpectedCounts expected;
    ExpectedCounts actual;
    std::vector<std::string> warnings;

    bool ok() const { return warnings.empty(); }
};

// Mismatches are warnings, not failures: a subset run is legitimate, a
// silently truncated file is not, and the caller decides which it has.
inline IntegrityReport verify_counts(const std::vector<AnswerTrace>& traces,
                                     const ExpectedCounts& expected) {
    IntegrityReport report;
    report.expected = expected;
    report.actual.traces = static_cast<int>(traces.size());
    for (const AnswerTrace& t : traces) {
        report.actual.steps += t.step_count();
        if (t.gold_trace_label == 1) report.actual.correct_traces += 1;
    }
    const auto check = [&](const char* what, int exp, int act) {
        if (exp != act) {
            report.warnings.push_back(std::string(what) + ": expected " + std::to_string(exp) +
                                      ", got " + std::to_string(act));
        }
    };
    check("traces", expected.traces, report.actual.traces);
    check("steps", expected.steps, report.actual.steps);
    check("correct traces", expected.correct_traces, report.actual.correct_traces);
    return report;
}

// ── Normalized export ───────────────────────────────────────────────

// One format downstream of both adapters: {"id", "question", "steps",
// "gold_step_labels" (optional), "first_mistake_index" (int|null)}.
inline nlohmann::json trace_to_normalized_json(const AnswerTrace& t) {
    nlohmann::json j;
    j["id"] = t.question.id;
    j["question"] = t.question.text;
    nlohmann::json steps = nlohmann::json::array();
    for (const AnswerStep& s : t.steps) steps.push_back(s.text);
    j["steps"] = std::move(steps);
    const bool any_gold = std::any_of(t.steps.begin(), t.steps.end(), [](const AnswerStep& s) {
        return s.gold_step_label.has_value();
    });
    if (any_gold) {
        nlohmann::json golds = nlohmann::json::array();
        for (const AnswerStep& s : t.steps) {
            if (s.gold_step_label) {
                golds.push_back(*s.gold_step_label);
            } else {
                golds.push_back(nullptr);
            }
        }
        j["gold_step_labels"] = std::move(golds);
    }
    if (t.gold_first_mistake) {
        j["first_mistake_index"] = *t.gold_first_mistake;
    } else {
        j["first_mistake_index"] = nullptr;
    }
    return j;
}

inline void write_normalized_jsonl(const std::vector<AnswerTrace>& traces,
                                   const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + path.string());
    for (const AnswerTrace& t : traces) {
        out << trace_to_normalized_json(t).dump() << '\n';
    }
}

inline std::vector<AnswerTrace> load_normalized_jsonl(const std::filesystem::path& path) {
    std::vector<AnswerTrace> traces;
    detail::for_each_jsonl_record(path, [&](const nlohmann::json& j, int lineno) {
        AnswerTrace trace;
        try {
            trace.question.id = j.at("id").get<std::string>();
            trace.question.text = j.at("question").get<std::string>();
            int index = 0;
            for (const auto& s : j.at("steps")) {
                trace.steps.push_back({++index, s.get<std::string>(), std::nullopt});
            }
            if (j.contains("gold_step_labels")) {
                const auto& golds = j.at("gold_step_labels");
                if (golds.size() != trace.steps.size()) {
                    throw LoadError(lineno, "gold_step_labels do not align with steps");
                }
                for (std::size_t i = 0; i < trace.steps.size(); ++i) {
                    if (!golds[i].is_null()) trace.steps[i].gold_step_label = golds[i].get<int>();
                }
            }
            if (j.contains("first_mistake_index") && !j.at("first_mistake_index").is_null()) {
                trace.gold_first_mistake = j.at("first_mistake_index").get<int>();
                trace.gold_trace_label = 0;
            }
            trace.validate();
        } catch (const LoadError&) {
            throw;
        } catch (const nlohmann::json::exception& e) {
            throw LoadError(lineno, std::string("malformed record: ") + e.what());
        } catch (const InvalidInput& e) {
            throw LoadError(lineno, e.what());
        }
        traces.push_back(std::move(trace));
    });
    return traces;
}

} // namespace pedcot
