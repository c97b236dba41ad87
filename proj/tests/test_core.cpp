#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "pedcot/core.hpp"

using namespace pedcot;

namespace {

const PrincipleLabel kLabels[] = {
    PrincipleLabel::CorrectAndAligned, PrincipleLabel::ReasonableButIncomplete,
    PrincipleLabel::ContradictionFound, PrincipleLabel::NothingExtracted};

AnswerTrace make_trace(const std::vector<std::string>& steps,
                       std::optional<int> first_mistake = std::nullopt) {
    AnswerTrace t;
    t.question = {"q1", "What is 2 + 2?"};
    for (std::size_t i = 0; i < steps.size(); ++i) {
        t.steps.push_back({static_cast<int>(i) + 1, steps[i], std::nullopt});
    }
    t.gold_first_mistake = first_mistake;
    t.gold_trace_label = first_mistake ? 0 : 1;
    return t;
}

} // namespace

TEST_CASE("aggregate_step_label follows the contradiction rule") {
    CHECK(aggregate_step_label({{PrincipleId::Concepts, PrincipleLabel::CorrectAndAligned},
                                {PrincipleId::Approaches, PrincipleLabel::CorrectAndAligned},
                                {PrincipleId::Calculations, PrincipleLabel::CorrectAndAligned}}) ==
          1);
    // only contradiction-found downgrades; incomplete and nothing-extracted do not
    CHECK(aggregate_step_label({{PrincipleId::Concepts, PrincipleLabel::CorrectAndAligned},
                                {PrincipleId::Approaches, PrincipleLabel::ReasonableButIncomplete},
                                {PrincipleId::Calculations, PrincipleLabel::NothingExtracted}}) ==
          1);
    CHECK(aggregate_step_label({{PrincipleId::Concepts, PrincipleLabel::CorrectAndAligned},
                                {PrincipleId::Approaches, PrincipleLabel::ContradictionFound},
                                {PrincipleId::Calculations, PrincipleLabel::CorrectAndAligned}}) ==
          0);
}

TEST_CASE("aggregate_step_label rejects an empty map") {
    CHECK_THROWS_AS(aggregate_step_label({}), InvalidInput);
}

TEST_CASE("aggregate_step_label matches exhaustive enumeration over 4^3 label maps") {
    int ones = 0, zeros = 0;
    for (PrincipleLabel a : kLabels) {
        for (PrincipleLabel b : kLabels) {
            for (PrincipleLabel c : kLabels) {
                const PrincipleLabels labels = {{PrincipleId::Concepts, a},
                                                {PrincipleId::Approaches, b},
                                                {PrincipleId::Calculations, c}};
                // independent oracle: direct scan of the constructed values
                const bool any_contradiction = a == PrincipleLabel::ContradictionFound ||
                                               b == PrincipleLabel::ContradictionFound ||
                                               c == PrincipleLabel::ContradictionFound;
                const int expected = any_contradiction ? 0 : 1;
                REQUIRE(aggregate_step_label(labels) == expected);
                (expected == 1 ? ones : zeros)++;
            }
        }
    }
    CHECK(ones == 27);
    CHECK(zeros == 37);
}

TEST_CASE("aggregate_step_label over ablated subsets") {
    for (PrincipleId only : kAllPrinciples) {
        CHECK(aggregate_step_label({{only, PrincipleLabel::ContradictionFound}}) == 0);
        CHECK(aggregate_step_label({{only, PrincipleLabel::NothingExtracted}}) == 1);
    }
}

TEST_CASE("aggregate_trace_label finds the first mistake") {
    const TraceAggregate all_good = aggregate_trace_label({1, 1, 1});
    CHECK(all_good.label == 1);
    CHECK_FALSE(all_good.first_mistake.has_value());

    const TraceAggregate mixed = aggregate_trace_label({1, 0, 1, 0});
    CHECK(mixed.label == 0);
    CHECK(mixed.first_mistake == 2);

    CHECK_THROWS_AS(aggregate_trace_label({}), InvalidInput);
}

TEST_CASE("aggregate_trace_label matches linear-scan oracle over all 2^n sequences, n <= 10") {
    for (int n = 1; n <= 10; ++n) {
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            std::vector<int> labels;
            for (int i = 0; i < n; ++i) labels.push_back((mask >> i) & 1u);

            // oracle: min + first zero by linear scan
            int expected_label = 1;
            std::optional<int> expected_first;
            for (int i = 0; i < n; ++i) {
                if (labels[i] == 0) {
                    expected_label = 0;
                    expected_first = i + 1;
                    break;
                }
            }
            const TraceAggregate got = aggregate_trace_label(labels);
            REQUIRE(got.label == expected_label);
            REQUIRE(got.first_mistake == expected_first);
        }
    }
}

TEST_CASE("appending steps to a mistake trace never changes the aggregate") {
    std::mt19937 rng(7);
    for (int round = 0; round < 200; ++round) {
        std::vector<int> labels;
        const int n = 1 + static_cast<int>(rng() % 8);
        for (int i = 0; i < n; ++i) labels.push_back(static_cast<int>(rng() % 2));
        labels[rng() % labels.size()] = 0; // force a mistake
        const TraceAggregate before = aggregate_trace_label(labels);
        REQUIRE(before.label == 0);
        for (int extra = 0; extra < 3; ++extra) {
            labels.push_back(static_cast<int>(rng() % 2));
            const TraceAggregate after = aggregate_trace_label(labels);
            REQUIRE(after.label == 0);
            REQUIRE(after.first_mistake == before.first_mistake);
        }
    }
}

TEST_CASE("AnswerTrace validation") {
    SECTION("well-formed traces pass") {
        make_trace({"a", "b", "c"}).validate();
        make_trace({"a", "b"}, 2).validate();
    }
    SECTION("empty steps rejected") {
        AnswerTrace t = make_trace({"a"});
        t.steps.clear();
        CHECK_THROWS_AS(t.validate(), InvalidInput);
    }
    SECTION("non-contiguous indices rejected") {
        AnswerTrace t = make_trace({"a", "b"});
        t.steps[1].index = 5;
        CHECK_THROWS_AS(t.validate(), InvalidInput);
    }
    SECTION("trace label must agree with first-mistake presence") {
        AnswerTrace t = make_trace({"a", "b"});
        t.gold_trace_label = 0; // but no gold_first_mistake
        CHECK_THROWS_AS(t.validate(), InvalidInput);
    }
    SECTION("first mistake out of range rejected") {
        AnswerTrace t = make_trace({"a", "b"}, 2);
        t.gold_first_mistake = 3;
        CHECK_THROWS_AS(t.validate(), InvalidInput);
    }
    SECTION("trace gold must be derivable from complete per-step golds") {
        AnswerTrace t = make_trace({"a", "b", "c"}, 2);
        t.steps[0].gold_step_label = 1;
        t.steps[1].gold_step_label = 0;
        t.steps[2].gold_step_label = 1;
        t.validate();
        t.gold_first_mistake = 1; // disagrees with the step golds
        CHECK_THROWS_AS(t.validate(), InvalidInput);
    }
}

TEST_CASE("principle label string round trip") {
    for (PrincipleLabel label : kLabels) {
        CHECK(principle_label_from_string(to_string(label)) == label);
    }
    CHECK_THROWS_AS(principle_label_from_string("half-right"), InvalidInput);
}
