#pragma once

// Shared builders for scripted PedCoT scenarios used by the pipeline tests
// and the acceptance suite.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pedcot/core.hpp"
#include "pedcot/llm.hpp"

namespace pedcot::testing {

inline AnswerTrace sentinel_trace(const std::string& id, int n_steps,
                                  std::optional<int> gold_mistake = std::nullopt) {
    AnswerTrace t;
    t.question = {id, "Compute ((3 + 5) * 2) - 4 for trace " + id + "."};
    for (int i = 1; i <= n_steps; ++i) {
        t.steps.push_back({i, "SENTINEL_" + id + "_S" + std::to_string(i), std::nullopt});
    }
    t.gold_first_mistake = gold_mistake;
    t.gold_trace_label = gold_mistake ? 0 : 1;
    return t;
}

// A well-formed Stage-1 response covering the given principles.
inline std::string stage1_response(const std::set<PrincipleId>& active = {
                                       PrincipleId::Concepts, PrincipleId::Approaches,
                                       PrincipleId::Calculations}) {
    static const std::map<int, std::string> parts = {
        {1, "1. The expected step relies on the order of operations."},
        {2, "2. The expected step applies the next pending operation."},
        {3, "3. The expected step computes the next partial result."}};
    std::string out;
    for (PrincipleId p : active) {
        if (!out.empty()) out += "\n\n";
        out += parts.at(principle_number(p));
    }
    return out;
}

// A Stage-2 response whose verdict lines carry the given labels (default
// correct-and-aligned) for the active principles.
inline std::string stage2_response(const std::map<int, std::string>& overrides = {},
                                   const std::set<PrincipleId>& active = {
                                       PrincipleId::Concepts, PrincipleId::Approaches,
                                       PrincipleId::Calculations}) {
    std::string out = "Comparing the extracted content with the reference analysis.\n";
    for (PrincipleId p : active) {
        const int k = principle_number(p);
        const auto it = overrides.find(k);
        out += "Principle " + std::to_string(k) + ": " +
               (it == overrides.end() ? "correct-and-aligned" : it->second) + "\n";
    }
    return out;
}

// Fixture map for a PedCoT run over one trace: clean verdicts everywhere
// except an optional contradiction (principle 3) at `mistake_at`.
inline void add_pedcot_fixtures(MockBackend::FixtureMap& fixtures, const AnswerTrace& trace,
                                std::optional<int> mistake_at = std::nullopt,
                                const std::set<PrincipleId>& active = {
                                    PrincipleId::Concepts, PrincipleId::Approaches,
                                    PrincipleId::Calculations}) {
    for (int i = 1; i <= trace.step_count(); ++i) {
        const std::string base = trace.question.id + "/" + std::to_string(i);
        fixtures[base + "/1"] = {stage1_response(active)};
        const bool bad = mistake_at && i == *mistake_at;
        fixtures[base + "/2"] = {stage2_response(
            bad ? std::map<int, std::string>{{3, "contradiction-found"}}
                : std::map<int, std::string>{},
            active)};
    }
}

} // namespace pedcot::testing
