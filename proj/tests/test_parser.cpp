#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "pedcot/parser.hpp"

using namespace pedcot;

namespace {

const std::set<PrincipleId> kAll = {PrincipleId::Concepts, PrincipleId::Approaches,
                                    PrincipleId::Calculations};

std::string compose(const std::string& s1, const std::string& s2, const std::string& s3) {
    return "1. " + s1 + "\n\n2. " + s2 + "\n\n3. " + s3;
}

// Random printable segment body free of the "\n\n<k>." delimiter sequences
// and already trimmed.
std::string random_body(std::mt19937& rng) {
    static const std::string alphabet =
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 .,+-*/=()";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::uniform_int_distribution<int> len(1, 60);
    std::uniform_int_distribution<int> newline(0, 9);
    std::string s;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
        if (i > 0 && i + 1 < n && newline(rng) == 0) {
            s.push_back('\n'); // single newlines are fine; blank lines are not
        } else {
            s.push_back(alphabet[pick(rng)]);
        }
    }
    if (s.front() == ' ' || s.front() == '\n') s.front() = 'x';
    if (s.back() == ' ' || s.back() == '\n') s.back() = 'x';
    return s;
}

} // namespace

TEST_CASE("split_stage1 splits a three-part response") {
    const RegeneratedContent g = split_stage1("1. concepts A\n\n2. plan B\n\n3. calc C", kAll);
    CHECK(g.segments.at(PrincipleId::Concepts) == "1. concepts A");
    CHECK(g.segments.at(PrincipleId::Approaches) == "2. plan B");
    CHECK(g.segments.at(PrincipleId::Calculations) == "3. calc C");
    CHECK(g.raw == "1. concepts A\n\n2. plan B\n\n3. calc C");
}

TEST_CASE("split_stage1 reports the missing delimiter") {
    try {
        split_stage1("1. A\n\n2. B", kAll);
        FAIL("expected MissingDelimiter");
    } catch (const MissingDelimiter& e) {
        CHECK(e.principle() == 3);
    }
}

TEST_CASE("split_stage1 rightmost-first order survives inner numbered lists") {
    // Segment 3 contains an inner numbered sub-list with its own "\n\n1."
    // and "\n\n2." lines. Cutting at "\n\n3." first means the later search
    // for "\n\n2." only looks at the head, so the inner items stay in G^(3).
    const std::string raw =
        "1. The distributive law\n\n"
        "2. Expand the brackets first\n\n"
        "3. Two sub-results:\n\n1. left term 12\n\n2. right term 30, so the sum is 42";
    const RegeneratedContent g = split_stage1(raw, kAll);
    // hand-segmented expectation
    CHECK(g.segments.at(PrincipleId::Concepts) == "1. The distributive law");
    CHECK(g.segments.at(PrincipleId::Approaches) == "2. Expand the brackets first");
    CHECK(g.segments.at(PrincipleId::Calculations) ==
          "3. Two sub-results:\n\n1. left term 12\n\n2. right term 30, so the sum is 42");
}

TEST_CASE("split_stage1 with ablated principle sets uses only active delimiters") {
    SECTION("active {1,3}: split on \\n\\n3. only, head is G^(1)") {
        const RegeneratedContent g =
            split_stage1("1. concepts\n\n3. calc",
                         {PrincipleId::Concepts, PrincipleId::Calculations});
        CHECK(g.segments.size() == 2);
        CHECK(g.segments.at(PrincipleId::Concepts) == "1. concepts");
        CHECK(g.segments.at(PrincipleId::Calculations) == "3. calc");
    }
    SECTION("active {2,3}") {
        const RegeneratedContent g =
            split_stage1("2. plan\n\n3. calc",
                         {PrincipleId::Approaches, PrincipleId::Calculations});
        CHECK(g.segments.at(PrincipleId::Approaches) == "2. plan");
        CHECK(g.segments.at(PrincipleId::Calculations) == "3. calc");
    }
    SECTION("single active principle takes the whole response") {
        const RegeneratedContent g =
            split_stage1("just the calculation part", {PrincipleId::Calculations});
        CHECK(g.segments.at(PrincipleId::Calculations) == "just the calculation part");
    }
}

TEST_CASE("split_stage1 error contracts") {
    CHECK_THROWS_AS(split_stage1("", kAll), InvalidInput);
    CHECK_THROWS_AS(split_stage1("1. a\n\n2. b\n\n3. c", std::set<PrincipleId>{}), InvalidInput);
    // head empty after trim
    try {
        split_stage1("\n\n3. calc", {PrincipleId::Concepts, PrincipleId::Calculations});
        FAIL("expected EmptySegment");
    } catch (const EmptySegment& e) {
        CHECK(e.principle() == 1);
    }
}

TEST_CASE("split_stage1 round-trips randomized three-segment compositions") {
    std::mt19937 rng(20240501);
    for (int round = 0; round < 1000; ++round) {
        const std::string s1 = random_body(rng);
        const std::string s2 = random_body(rng);
        const std::string s3 = random_body(rng);
        const std::string raw = compose(s1, s2, s3);
        const RegeneratedContent g = split_stage1(raw, kAll);
        REQUIRE(g.segments.size() == 3);
        REQUIRE(g.segments.at(PrincipleId::Concepts) == "1. " + s1);
        REQUIRE(g.segments.at(PrincipleId::Approaches) == "2. " + s2);
        REQUIRE(g.segments.at(PrincipleId::Calculations) == "3. " + s3);
    }
}

TEST_CASE("split_stage1 concatenation reconstructs the raw text") {
    const std::string raw = "1. alpha\n\n2. beta\n\n3. gamma";
    const RegeneratedContent g = split_stage1(raw, kAll);
    const std::string rebuilt = g.segments.at(PrincipleId::Concepts) + "\n\n" +
                                g.segments.at(PrincipleId::Approaches) + "\n\n" +
                                g.segments.at(PrincipleId::Calculations);
    CHECK(rebuilt == raw);
}

TEST_CASE("parse_stage2 reads trailing verdict lines") {
    const std::string raw =
        "Comparing each part with the reference analysis.\n"
        "Principle 1: correct-and-aligned\n"
        "Principle 2: correct-and-aligned\n"
        "Principle 3: contradiction-found";
    const ParsedVerdict v = parse_stage2(raw, kAll);
    CHECK(v.labels.at(PrincipleId::Concepts) == PrincipleLabel::CorrectAndAligned);
    CHECK(v.labels.at(PrincipleId::Approaches) == PrincipleLabel::CorrectAndAligned);
    CHECK(v.labels.at(PrincipleId::Calculations) == PrincipleLabel::ContradictionFound);
}

TEST_CASE("parse_stage2 verdict grammar is case and punctuation tolerant") {
    const std::string raw =
        "**Principle 1: Correct and Aligned.**\n"
        "- principle 2: NOTHING-EXTRACTED\n"
        "Principle 3 : reasonable but incomplete";
    const ParsedVerdict v = parse_stage2(raw, kAll);
    CHECK(v.labels.at(PrincipleId::Concepts) == PrincipleLabel::CorrectAndAligned);
    CHECK(v.labels.at(PrincipleId::Approaches) == PrincipleLabel::NothingExtracted);
    CHECK(v.labels.at(PrincipleId::Calculations) == PrincipleLabel::ReasonableButIncomplete);
}

TEST_CASE("parse_stage2 last verdict line per principle wins") {
    const std::string raw =
        "Principle 1: reasonable-but-incomplete\n"
        "On reflection the step is fine.\n"
        "Principle 1: correct-and-aligned";
    const ParsedVerdict v = parse_stage2(raw, {PrincipleId::Concepts});
    CHECK(v.labels.at(PrincipleId::Concepts) == PrincipleLabel::CorrectAndAligned);
}

TEST_CASE("parse_stage2 falls back to a per-section keyword scan") {
    const std::string raw =
        "1. The concepts used are the rules of arithmetic, which are correct and aligned with "
        "the expected part.\n\n"
        "2. The approach follows the expected plan; it is correct and aligned.\n\n"
        "3. For the third aspect, a contradiction is found between the calculation and the step.";
    const ParsedVerdict v = parse_stage2(raw, kAll);
    CHECK(v.labels.at(PrincipleId::Concepts) == PrincipleLabel::CorrectAndAligned);
    CHECK(v.labels.at(PrincipleId::Approaches) == PrincipleLabel::CorrectAndAligned);
    CHECK(v.labels.at(PrincipleId::Calculations) == PrincipleLabel::ContradictionFound);
}

TEST_CASE("parse_stage2 fallback precedence: contradiction outranks politeness") {
    const std::string raw =
        "Principle 1 analysis: the concepts look correct and aligned overall, but a "
        "contradiction is found in the usage of the power rule.";
    const ParsedVerdict v = parse_stage2(raw, {PrincipleId::Concepts});
    CHECK(v.labels.at(PrincipleId::Concepts) == PrincipleLabel::ContradictionFound);
}

TEST_CASE("parse_stage2 fallback does not trip on negated contradictions") {
    const std::string raw =
        "Principle 1 analysis: no contradiction is found; the extracted concept is correct "
        "and aligned with the reference.";
    const ParsedVerdict v = parse_stage2(raw, {PrincipleId::Concepts});
    CHECK(v.labels.at(PrincipleId::Concepts) == PrincipleLabel::CorrectAndAligned);
}

TEST_CASE("parse_stage2 extracts E segments between section headers") {
    const std::string raw =
        "Part 1 - mathematical concepts:\nThe step uses the distributive law.\n"
        "Part 2 - problem-solving approaches:\nIt expands the brackets.\n"
        "Part 3 - calculations:\nIt computes 6 * 7 = 42.\n"
        "Principle 1: correct-and-aligned\n"
        "Principle 2: correct-and-aligned\n"
        "Principle 3: correct-and-aligned";
    const ParsedVerdict v = parse_stage2(raw, kAll);
    CHECK(v.extracted.segments.at(PrincipleId::Concepts) ==
          "The step uses the distributive law.");
    CHECK(v.extracted.segments.at(PrincipleId::Approaches) == "It expands the brackets.");
    CHECK(v.extracted.segments.at(PrincipleId::Calculations) == "It computes 6 * 7 = 42.");
    CHECK(v.extracted.raw == raw);
}

TEST_CASE("parse_stage2 error contracts") {
    CHECK_THROWS_AS(parse_stage2("", kAll), InvalidInput);
    try {
        parse_stage2("The weather is nice today.", kAll);
        FAIL("expected ParseFailure");
    } catch (const ParseFailure& e) {
        CHECK(e.principles() == std::vector<int>{1, 2, 3});
    }
    // one principle resolvable, the others not
    try {
        parse_stage2("Principle 2: correct-and-aligned", kAll);
        FAIL("expected ParseFailure");
    } catch (const ParseFailure& e) {
        CHECK(e.principles() == std::vector<int>{1, 3});
    }
}

TEST_CASE("parse_stage2 never invents a label outside the closed set") {
    std::mt19937 rng(99);
    const std::set<PrincipleLabel> closed = {
        PrincipleLabel::CorrectAndAligned, PrincipleLabel::ReasonableButIncomplete,
        PrincipleLabel::ContradictionFound, PrincipleLabel::NothingExtracted};
    for (int round = 0; round < 200; ++round) {
        std::string raw = "Principle 1: ";
        raw += (rng() % 2) ? "correct-and-aligned" : "nothing extracted";
        const ParsedVerdict v = parse_stage2(raw, {PrincipleId::Concepts});
        for (const auto& [p, label] : v.labels) REQUIRE(closed.count(label) == 1);
    }
}

TEST_CASE("parse_stage2 is deterministic") {
    const std::string raw =
        "Part 1 - mathematical concepts: fine.\nPrinciple 1: correct-and-aligned";
    const ParsedVerdict a = parse_stage2(raw, {PrincipleId::Concepts});
    const ParsedVerdict b = parse_stage2(raw, {PrincipleId::Concepts});
    CHECK(a.labels == b.labels);
    CHECK(a.extracted.segments == b.extracted.segments);
}

TEST_CASE("parse_direct_step") {
    CHECK(parse_direct_step("Yes.") == 1);
    CHECK(parse_direct_step("no, because 7*3=21") == 0);
    CHECK(parse_direct_step("I think yes") == 1);
    CHECK_THROWS_AS(parse_direct_step("maybe"), ParseFailure);
    CHECK_THROWS_AS(parse_direct_step(""), InvalidInput);
}
