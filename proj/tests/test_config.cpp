#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "pedcot/config.hpp"

using namespace pedcot;

namespace {

namespace fs = std::filesystem;

fs::path write_temp(const std::string& name, const std::string& content) {
    const fs::path p = fs::temp_directory_path() / name;
    std::ofstream out(p, std::ios::trunc);
    out << content;
    return p;
}

} // namespace

TEST_CASE("config file parsing covers all sections") {
    const fs::path p = write_temp("pedcot_cfg1.toml",
                                  "# experiment config\n"
                                  "[run]\n"
                                  "strategy = pedcot\n"
                                  "mode = mock\n"
                                  "parallel = 4\n"
                                  "on_parse_failure = treat_mistake\n"
                                  "ablate = 2\n"
                                  "limit = 10\n"
                                  "\n"
                                  "[model]\n"
                                  "name = gpt-4-1106-preview\n"
                                  "temperature = 0  # keep deterministic\n"
                                  "max_retries = 3\n"
                                  "requests_per_minute = 60\n"
                                  "\n"
                                  "[dataset]\n"
                                  "name = prm800k\n"
                                  "path = data/prm800k_sample.jsonl\n"
                                  "\n"
                                  "[paths]\n"
                                  "templates = templates\n"
                                  "out = runs/exp1\n");
    const CliConfig cfg = parse_config_file(p);
    CHECK(cfg.run.strategy == StrategyId::PedCoT);
    CHECK(cfg.run.mode == Mode::Mock);
    CHECK(cfg.run.parallel_traces == 4);
    CHECK(cfg.run.on_parse_failure == OnParseFailure::TreatMistake);
    CHECK(cfg.run.active_principles ==
          std::set<PrincipleId>{PrincipleId::Concepts, PrincipleId::Calculations});
    CHECK(cfg.limit == 10);
    CHECK(cfg.run.model.model_name == "gpt-4-1106-preview");
    CHECK(cfg.run.model.max_retries == 3);
    CHECK(cfg.run.model.requests_per_minute == 60);
    CHECK(cfg.dataset == DatasetName::Prm800k);
    CHECK(cfg.data_path == "data/prm800k_sample.jsonl");
    CHECK(cfg.out_dir == "runs/exp1");
    fs::remove(p);
}

TEST_CASE("unknown keys and sections are rejected") {
    const fs::path bad_key = write_temp("pedcot_cfg2.toml", "[run]\nstrateggy = pedcot\n");
    CHECK_THROWS_AS(parse_config_file(bad_key), ConfigError);
    fs::remove(bad_key);

    const fs::path bad_section = write_temp("pedcot_cfg3.toml", "[lemmings]\nx = 1\n");
    CHECK_THROWS_AS(parse_config_file(bad_section), ConfigError);
    fs::remove(bad_section);

    const fs::path stray = write_temp("pedcot_cfg4.toml", "strategy = pedcot\n");
    CHECK_THROWS_AS(parse_config_file(stray), ConfigError);
    fs::remove(stray);

    CHECK_THROWS_AS(parse_config_file("/nonexistent/pedcot.toml"), ConfigError);
}

TEST_CASE("bad values carry the full key in the error") {
    const fs::path p = write_temp("pedcot_cfg5.toml", "[run]\nparallel = soon\n");
    try {
        parse_config_file(p);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("run.parallel") != std::string::npos);
    }
    fs::remove(p);
}

TEST_CASE("flag overrides take precedence over file values") {
    const fs::path p = write_temp("pedcot_cfg6.toml", "[run]\nstrategy = pedcot\nmode = mock\n");
    CliConfig cfg = parse_config_file(p);
    config_set(cfg, "run", "strategy", "direct-step"); // flag override
    CHECK(cfg.run.strategy == StrategyId::DirectStep);
    fs::remove(p);
}

TEST_CASE("ablating every principle is rejected") {
    CliConfig cfg;
    CHECK_THROWS_AS(apply_ablation(cfg.run, {1, 2, 3}), ConfigError);
    CliConfig cfg2;
    apply_ablation(cfg2.run, {3});
    CHECK(cfg2.run.active_principles ==
          std::set<PrincipleId>{PrincipleId::Concepts, PrincipleId::Approaches});
}

TEST_CASE("validation requires mode-specific paths before any request") {
    const fs::path data = write_temp("pedcot_cfg_data.jsonl",
                                     R"({"input":"q","steps":["s"],"mistake_index":null})" "\n");
    CliConfig cfg;
    cfg.data_path = data;

    SECTION("replay without cache dir") {
        cfg.run.mode = Mode::Replay;
        CHECK_THROWS_AS(validate_cli_config(cfg), ConfigError);
    }
    SECTION("mock without fixtures") {
        cfg.run.mode = Mode::Mock;
        CHECK_THROWS_AS(validate_cli_config(cfg), ConfigError);
    }
    SECTION("live without credential") {
        cfg.run.mode = Mode::Live;
        cfg.cache_dir = fs::temp_directory_path();
        cfg.run.model.api_key_ref = "PEDCOT_CFG_TEST_NO_KEY";
        ::unsetenv("PEDCOT_CFG_TEST_NO_KEY");
        CHECK_THROWS_AS(validate_cli_config(cfg), ConfigError);
    }
    SECTION("missing dataset file") {
        cfg.run.mode = Mode::Mock;
        cfg.data_path = "/nonexistent/data.jsonl";
        CHECK_THROWS_AS(validate_cli_config(cfg), ConfigError);
    }
    fs::remove(data);
}

TEST_CASE("config snapshot re-parses to the same settings") {
    CliConfig cfg;
    cfg.run.strategy = StrategyId::PedCoTOneStage;
    cfg.run.mode = Mode::Replay;
    cfg.run.parallel_traces = 3;
    apply_ablation(cfg.run, {1});
    cfg.dataset = DatasetName::Prm800k;
    cfg.data_path = "data/x.jsonl";
    cfg.cache_dir = "runs/cache";
    cfg.limit = 5;

    const fs::path p = write_temp("pedcot_cfg7.toml", config_to_string(cfg));
    const CliConfig back = parse_config_file(p);
    CHECK(back.run.strategy == cfg.run.strategy);
    CHECK(back.run.mode == cfg.run.mode);
    CHECK(back.run.parallel_traces == cfg.run.parallel_traces);
    CHECK(back.run.active_principles == cfg.run.active_principles);
    CHECK(back.dataset == cfg.dataset);
    CHECK(back.data_path == cfg.data_path);
    CHECK(back.cache_dir == cfg.cache_dir);
    CHECK(back.limit == cfg.limit);
    fs::remove(p);
}
