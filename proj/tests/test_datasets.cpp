#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "pedcot/datasets.hpp"

using namespace pedcot;

namespace {

namespace fs = std::filesystem;

fs::path write_temp(const std::string& name, const std::string& content) {
    const fs::path p = fs::temp_directory_path() / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
    return p;
}

} // namespace

TEST_CASE("load_bigbench converts 0-based mistake locations to 1-based") {
    const fs::path p = write_temp(
        "pedcot_bb1.jsonl",
        R"({"id":"a","input":"Compute 1+1.","steps":["s1","s2","s3","s4"],"mistake_index":2})"
        "\n");
    const auto traces = load_bigbench(p);
    REQUIRE(traces.size() == 1);
    CHECK(traces[0].gold_first_mistake == 3);
    CHECK(traces[0].gold_trace_label == 0);
    CHECK(traces[0].steps.size() == 4);
    CHECK(traces[0].steps[0].gold_step_label == 1);
    CHECK(traces[0].steps[2].gold_step_label == 0);
    CHECK_FALSE(traces[0].steps[3].gold_step_label.has_value()); // unknown after the mistake
    fs::remove(p);
}

TEST_CASE("load_bigbench null mistake_index means a correct trace") {
    const fs::path p = write_temp(
        "pedcot_bb2.jsonl",
        R"({"input":"Compute 2+2.","steps":["s1","s2","s3"],"mistake_index":null})"
        "\n");
    const auto traces = load_bigbench(p);
    REQUIRE(traces.size() == 1);
    CHECK(traces[0].gold_trace_label == 1);
    CHECK_FALSE(traces[0].gold_first_mistake.has_value());
    CHECK(traces[0].question.id == "bigbench-1"); // synthesized id
    fs::remove(p);
}

TEST_CASE("load_bigbench honors the 1-based source flag") {
    const fs::path p = write_temp(
        "pedcot_bb3.jsonl",
        R"({"input":"q","steps":["s1","s2"],"mistake_index":1})"
        "\n");
    CHECK(load_bigbench(p)[0].gold_first_mistake == 2);
    CHECK(load_bigbench(p, /*zero_based_locations=*/false)[0].gold_first_mistake == 1);
    fs::remove(p);
}

TEST_CASE("load_bigbench reports malformed records with their line number") {
    const fs::path p = write_temp("pedcot_bb4.jsonl",
                                  R"({"input":"ok","steps":["s"],"mistake_index":null})"
                                  "\n"
                                  R"({"input":"broken")"
                                  "\n");
    try {
        load_bigbench(p);
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        CHECK(e.line() == 2);
    }
    fs::remove(p);
}

TEST_CASE("load_bigbench rejects out-of-range locations and empty steps") {
    const fs::path bad_loc = write_temp(
        "pedcot_bb5.jsonl", R"({"input":"q","steps":["s1","s2"],"mistake_index":2})" "\n");
    CHECK_THROWS_AS(load_bigbench(bad_loc), LoadError);
    fs::remove(bad_loc);

    const fs::path no_steps =
        write_temp("pedcot_bb6.jsonl", R"({"input":"q","steps":[],"mistake_index":null})" "\n");
    CHECK_THROWS_AS(load_bigbench(no_steps), LoadError);
    fs::remove(no_steps);
}

TEST_CASE("load_prm800k maps ratings and derives the first mistake") {
    const fs::path p = write_temp(
        "pedcot_prm1.jsonl",
        R"({"id":"w1","question":"How many?","steps":["s1","s2","s3","s4"],)"
        R"("ratings":["positive","neutral","negative","positive"]})"
        "\n");
    const auto traces = load_prm800k(p);
    REQUIRE(traces.size() == 1);
    const AnswerTrace& t = traces[0];
    CHECK(t.steps[0].gold_step_label == 1);
    CHECK(t.steps[1].gold_step_label == 1); // neutral counts as right
    CHECK(t.steps[2].gold_step_label == 0);
    CHECK(t.steps[3].gold_step_label == 1);
    CHECK(t.gold_first_mistake == 3);
    CHECK(t.gold_trace_label == 0);
    fs::remove(p);
}

TEST_CASE("load_prm800k accepts integer ratings and all-positive traces") {
    const fs::path p = write_temp(
        "pedcot_prm2.jsonl",
        R"({"question":"q","steps":["s1","s2"],"ratings":[1,0]})"
        "\n");
    const auto traces = load_prm800k(p);
    CHECK(traces[0].gold_trace_label == 1); // 0 = neutral = right
    fs::remove(p);
}

TEST_CASE("load_prm800k rejects unknown ratings") {
    const fs::path p = write_temp(
        "pedcot_prm3.jsonl",
        R"({"question":"q","steps":["s1"],"ratings":["fine"]})"
        "\n");
    try {
        load_prm800k(p);
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        CHECK(e.line() == 1);
    }
    fs::remove(p);
}

TEST_CASE("load_prm800k strict mode drops neutral steps and reindexes") {
    const fs::path p = write_temp(
        "pedcot_prm4.jsonl",
        R"({"question":"q","steps":["s1","s2","s3"],"ratings":["positive","neutral","negative"]})"
        "\n");
    const auto traces = load_prm800k(p, /*exclude_neutral=*/true);
    REQUIRE(traces[0].steps.size() == 2);
    CHECK(traces[0].steps[0].text == "s1");
    CHECK(traces[0].steps[1].text == "s3");
    CHECK(traces[0].steps[1].index == 2);
    CHECK(traces[0].gold_first_mistake == 2);
    fs::remove(p);
}

TEST_CASE("prm mapping matches the linear-scan oracle on random ratings") {
    std::mt19937 rng(41);
    const char* names[] = {"positive", "neutral", "negative"};
    for (int round = 0; round < 100; ++round) {
        const int n = 1 + static_cast<int>(rng() % 12);
        std::string steps = "[", ratings = "[";
        std::vector<int> expected;
        for (int i = 0; i < n; ++i) {
            const int r = static_cast<int>(rng() % 3);
            expected.push_back(r == 2 ? 0 : 1);
            steps += (i ? "," : "") + std::string("\"s") + std::to_string(i) + "\"";
            ratings += (i ? "," : "") + std::string("\"") + names[r] + "\"";
        }
        steps += "]";
        ratings += "]";
        const fs::path p = write_temp(
            "pedcot_prm_prop.jsonl",
            R"({"question":"q","steps":)" + steps + R"(,"ratings":)" + ratings + "}\n");
        const auto traces = load_prm800k(p);
        std::optional<int> first;
        for (int i = 0; i < n; ++i) {
            if (expected[i] == 0) {
                first = i + 1;
                break;
            }
        }
        REQUIRE(traces[0].gold_first_mistake == first);
        for (int i = 0; i < n; ++i) {
            REQUIRE(traces[0].steps[i].gold_step_label == expected[i]);
        }
        fs::remove(p);
    }
}

TEST_CASE("verify_counts flags mismatches as warnings, not errors") {
    const fs::path p = write_temp(
        "pedcot_counts.jsonl",
        R"({"input":"q","steps":["s1","s2"],"mistake_index":null})"
        "\n"
        R"({"input":"q","steps":["s1"],"mistake_index":0})"
        "\n");
    const auto traces = load_bigbench(p);
    CHECK(verify_counts(traces, {2, 3, 1}).ok());

    const IntegrityReport bad = verify_counts(traces, {300, 1506, 62});
    CHECK_FALSE(bad.ok());
    CHECK(bad.warnings.size() == 3);
    CHECK(bad.actual.traces == 2);
    fs::remove(p);
}

TEST_CASE("normalized export round-trips step text byte-identically") {
    const fs::path src = write_temp(
        "pedcot_norm_src.jsonl",
        R"({"id":"r1","input":"Compute (2*3)+1.","steps":["a  b","c\td","e"],"mistake_index":1})"
        "\n");
    const auto traces = load_bigbench(src);

    const fs::path out = fs::temp_directory_path() / "pedcot_norm_out.jsonl";
    write_normalized_jsonl(traces, out);
    const auto back = load_normalized_jsonl(out);

    REQUIRE(back.size() == traces.size());
    for (std::size_t i = 0; i < traces.size(); ++i) {
        REQUIRE(back[i].steps.size() == traces[i].steps.size());
        for (std::size_t s = 0; s < traces[i].steps.size(); ++s) {
            REQUIRE(back[i].steps[s].text == traces[i].steps[s].text);
            REQUIRE(back[i].steps[s].gold_step_label == traces[i].steps[s].gold_step_label);
        }
        REQUIRE(back[i].gold_first_mistake == traces[i].gold_first_mistake);
        REQUIRE(back[i].question.text == traces[i].question.text);
    }
    // exporting the reloaded traces reproduces the file byte for byte
    const fs::path out2 = fs::temp_directory_path() / "pedcot_norm_out2.jsonl";
    write_normalized_jsonl(back, out2);
    std::ifstream a(out), b(out2);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
    fs::remove(src);
    fs::remove(out);
    fs::remove(out2);
}

TEST_CASE("every loaded trace satisfies the AnswerTrace invariants") {
    const fs::path p = write_temp(
        "pedcot_inv.jsonl",
        R"({"input":"q","steps":["s1","s2","s3"],"mistake_index":1})"
        "\n"
        R"({"input":"q","steps":["s1"],"mistake_index":null})"
        "\n");
    for (const AnswerTrace& t : load_bigbench(p)) {
        CHECK_NOTHROW(t.validate());
    }
    fs::remove(p);
}

TEST_CASE("missing dataset file raises LoadError") {
    CHECK_THROWS_AS(load_bigbench("/nonexistent/pedcot.jsonl"), LoadError);
    CHECK_THROWS_AS(load_prm800k("/nonexistent/pedcot.jsonl"), LoadError);
}
