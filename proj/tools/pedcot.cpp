// pedcot: find mistakes in step-by-step math reasoning traces with the
// two-stage PedCoT protocol, score stored predictions, and inspect runs.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pedcot/config.hpp"
#include "pedcot/http_transport.hpp"
#include "pedcot/metrics.hpp"
#include "pedcot/pedcot.hpp"

namespace fs = std::filesystem;
using namespace pedcot;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitPartial = 3; // run finished but some traces failed

struct CommonFlags {
    std::string config_file;
    std::string dataset;
    std::string data_path;
    std::string strategy;
    std::string model;
    std::string mode;
    std::vector<int> ablate;
    int parallel = 0;
    std::string cache_dir;
    std::string templates_dir;
    std::string fixtures;
    std::string out;
    std::string on_parse_failure;
    int limit = -1;
};

void add_run_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_file, "Config file (sectioned key = value)");
    cmd->add_option("--dataset", f.dataset, "Dataset name: bigbench | prm800k");
    cmd->add_option("--data-path", f.data_path, "Dataset JSONL file");
    cmd->add_option("--strategy", f.strategy,
                    "pedcot | pedcot-one-stage | direct-step | vanilla-two-stage | zero-shot-cot");
    cmd->add_option("--model", f.model, "Model name (e.g. gpt-4, gpt-4-1106-preview)");
    cmd->add_option("--mode", f.mode, "live | replay | mock");
    cmd->add_option("--ablate", f.ablate, "Principle to remove (1|2|3); repeatable")
        ->check(CLI::Range(1, 3));
    cmd->add_option("--parallel", f.parallel, "Concurrent traces");
    cmd->add_option("--cache-dir", f.cache_dir, "Response cache directory");
    cmd->add_option("--templates", f.templates_dir, "Template bundle directory");
    cmd->add_option("--fixtures", f.fixtures, "Mock fixture JSON file");
    cmd->add_option("--out", f.out, "Run output directory");
    cmd->add_option("--on-parse-failure", f.on_parse_failure,
                    "fail | retry_then_fail | treat_correct | treat_mistake");
    cmd->add_option("--limit", f.limit, "Evaluate only the first N traces");
}

CliConfig build_config(const CommonFlags& f) {
    CliConfig cfg;
    if (!f.config_file.empty()) cfg = parse_config_file(f.config_file);
    if (!f.dataset.empty()) config_set(cfg, "dataset", "name", f.dataset);
    if (!f.data_path.empty()) config_set(cfg, "dataset", "path", f.data_path);
    if (!f.strategy.empty()) config_set(cfg, "run", "strategy", f.strategy);
    if (!f.model.empty()) config_set(cfg, "model", "name", f.model);
    if (!f.mode.empty()) config_set(cfg, "run", "mode", f.mode);
    if (!f.ablate.empty()) apply_ablation(cfg.run, f.ablate);
    if (f.parallel > 0) cfg.run.parallel_traces = f.parallel;
    if (!f.cache_dir.empty()) config_set(cfg, "paths", "cache_dir", f.cache_dir);
    if (!f.templates_dir.empty()) config_set(cfg, "paths", "templates", f.templates_dir);
    if (!f.fixtures.empty()) config_set(cfg, "paths", "fixtures", f.fixtures);
    if (!f.out.empty()) config_set(cfg, "paths", "out", f.out);
    if (!f.on_parse_failure.empty()) {
        config_set(cfg, "run", "on_parse_failure", f.on_parse_failure);
    }
    if (f.limit >= 0) cfg.limit = f.limit;
    return cfg;
}

TemplateSet load_effective_templates(const CliConfig& cfg) {
    return cfg.templates_dir.empty() ? load_templates() : load_templates_dir(cfg.templates_dir);
}

std::vector<AnswerTrace> load_configured_dataset(const CliConfig& cfg) {
    std::vector<AnswerTrace> traces =
        cfg.dataset == DatasetName::BigBenchMistake ? load_bigbench(cfg.data_path)
                                                    : load_prm800k(cfg.data_path);
    const IntegrityReport integrity = verify_counts(traces, expected_counts(cfg.dataset));
    if (!integrity.ok()) {
        std::cerr << "integrity check against the published " << to_string(cfg.dataset)
                  << " sample sizes:\n";
        for (const std::string& w : integrity.warnings) std::cerr << "  warning: " << w << '\n';
    }
    if (cfg.limit > 0 && static_cast<int>(traces.size()) > cfg.limit) {
        traces.resize(static_cast<std::size_t>(cfg.limit));
    }
    return traces;
}

Client build_client(const CliConfig& cfg) {
    switch (cfg.run.mode) {
        case Mode::Mock: {
            std::shared_ptr<ResponseCache> cache;
            if (!cfg.cache_dir.empty()) cache = std::make_shared<ResponseCache>(cfg.cache_dir);
            return Client::mock(MockBackend::fixtures_from_file(cfg.fixtures_path), cache);
        }
        case Mode::Replay:
            return Client::replay(std::make_shared<ResponseCache>(cfg.cache_dir));
        case Mode::Live:
            return make_live_client(cfg.run.model, std::make_shared<ResponseCache>(cfg.cache_dir));
    }
    throw ConfigError("unknown mode");
}

void snapshot_templates(const TemplateSet& t, const fs::path& dir) {
    fs::create_directories(dir / "baselines");
    const auto write = [](const fs::path& p, const std::string& text) {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        out << text;
    };
    write(dir / "stage1.txt", t.stage1);
    write(dir / "stage2.txt", t.stage2);
    for (const auto& [strategy, text] : t.baselines) {
        write(dir / "baselines" / (std::string(to_string(strategy)) + ".txt"), text);
    }
}

// Golds for the verdicts actually present, aligned by trace id.
std::vector<AnswerTrace> align_golds(const std::vector<TraceVerdict>& verdicts,
                                     const std::vector<AnswerTrace>& traces) {
    std::map<std::string, const AnswerTrace*> by_id;
    for (const AnswerTrace& t : traces) by_id[t.question.id] = &t;
    std::vector<AnswerTrace> golds;
    golds.reserve(verdicts.size());
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        const auto it = by_id.find(verdicts[i].trace_id);
        if (it == by_id.end()) {
            throw InvalidInput("record " + std::to_string(i + 1) + ": trace id \"" +
                               verdicts[i].trace_id + "\" not present in the dataset");
        }
        golds.push_back(*it->second);
    }
    return golds;
}

int cmd_run(const CommonFlags& flags) {
    CliConfig cfg;
    TemplateSet templates;
    std::vector<AnswerTrace> traces;
    try {
        cfg = build_config(flags);
        validate_cli_config(cfg);
        templates = load_effective_templates(cfg);
        traces = load_configured_dataset(cfg);
        if (traces.empty()) throw ConfigError("dataset is empty");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        Client client = build_client(cfg);
        const RunResult result = evaluate_dataset(traces, cfg.run, templates, client);

        const std::vector<AnswerTrace> golds = align_golds(result.verdicts, traces);
        const MetricsReport metrics = score_run(result.verdicts, golds);
        const std::string label = run_label(cfg.run);

        fs::create_directories(cfg.out_dir);
        write_transcript_file(result, cfg.run.strategy, cfg.out_dir / "transcript.jsonl");
        snapshot_templates(templates, cfg.out_dir / "templates");
        {
            std::ofstream out(cfg.out_dir / "config.toml", std::ios::trunc);
            out << config_to_string(cfg);
        }

        nlohmann::json verdict_summaries = nlohmann::json::array();
        for (const TraceVerdict& v : result.verdicts) {
            nlohmann::json j = trace_verdict_summary_json(v);
            j.erase("type");
            verdict_summaries.push_back(std::move(j));
        }
        nlohmann::json failure_list = nlohmann::json::array();
        for (const TraceFailure& f : result.failures) {
            failure_list.push_back({{"trace_id", f.trace_id}, {"error", f.message}});
        }
        nlohmann::json active = nlohmann::json::array();
        for (PrincipleId p : cfg.run.active_principles) active.push_back(principle_number(p));
        const nlohmann::json report = {
            {"run",
             {{"label", label},
              {"strategy", to_string(cfg.run.strategy)},
              {"dataset", to_string(cfg.dataset)},
              {"data_path", cfg.data_path.string()},
              {"mode", to_string(cfg.run.mode)},
              {"model", cfg.run.model.model_name},
              {"active_principles", std::move(active)},
              {"parallel_traces", cfg.run.parallel_traces},
              {"on_parse_failure", to_string(cfg.run.on_parse_failure)}}},
            {"totals",
             {{"traces", traces.size()},
              {"verdicts", result.verdicts.size()},
              {"failures", result.failures.size()},
              {"requests", result.total_requests},
              {"wall_ms", result.wall_ms}}},
            {"metrics", metrics_to_json(metrics)},
            {"verdicts", std::move(verdict_summaries)},
            {"failures", std::move(failure_list)},
        };
        {
            std::ofstream out(cfg.out_dir / "report.json", std::ios::trunc);
            out << report.dump(2) << '\n';
        }
        const std::string table = metrics_table(metrics, label);
        {
            std::ofstream out(cfg.out_dir / "metrics.txt", std::ios::trunc);
            out << table;
        }

        std::cout << table;
        std::cout << "traces: " << traces.size() << "  verdicts: " << result.verdicts.size()
                  << "  failures: " << result.failures.size()
                  << "  requests: " << result.total_requests << "  wall: " << result.wall_ms
                  << " ms\n";
        std::cout << "run directory: " << cfg.out_dir.string() << '\n';
        if (!result.failures.empty()) {
            for (const TraceFailure& f : result.failures) {
                std::cerr << "failed trace " << f.trace_id << ": " << f.message << '\n';
            }
            return kExitPartial;
        }
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

int cmd_score(const std::string& predictions, const CommonFlags& flags, bool as_json) {
    try {
        CliConfig cfg = build_config(flags);
        if (!fs::exists(predictions)) {
            throw ConfigError("predictions file not found: " + predictions);
        }
        if (cfg.data_path.empty()) throw ConfigError("no dataset path configured");
        if (!fs::exists(cfg.data_path)) {
            throw ConfigError("dataset file not found: " + cfg.data_path.string());
        }

        const RunResult stored = read_transcript_file(predictions);
        if (stored.verdicts.empty()) throw InvalidInput("no trace records in " + predictions);
        const std::vector<AnswerTrace> traces =
            cfg.dataset == DatasetName::BigBenchMistake ? load_bigbench(cfg.data_path)
                                                        : load_prm800k(cfg.data_path);
        const std::vector<AnswerTrace> golds = align_golds(stored.verdicts, traces);
        const MetricsReport metrics = score_run(stored.verdicts, golds);

        if (as_json) {
            std::cout << metrics_to_json(metrics).dump(2) << '\n';
        } else {
            std::cout << metrics_table(metrics, "scored");
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

int cmd_inspect(const std::string& run_dir, const std::string& trace_id) {
    try {
        const fs::path transcript = fs::path(run_dir) / "transcript.jsonl";
        if (!fs::exists(transcript)) {
            throw ConfigError("no transcript.jsonl under " + run_dir);
        }
        const RunResult stored = read_transcript_file(transcript);
        const TraceVerdict* found = nullptr;
        for (const TraceVerdict& v : stored.verdicts) {
            if (v.trace_id == trace_id) {
                found = &v;
                break;
            }
        }
        if (!found) {
            std::cerr << "error: unknown trace id \"" << trace_id << "\"; available:";
            for (const TraceVerdict& v : stored.verdicts) std::cerr << ' ' << v.trace_id;
            std::cerr << '\n';
            return kExitRuntime;
        }

        std::cout << "trace " << found->trace_id << ": label " << found->trace_label;
        if (found->predicted_first_mistake) {
            std::cout << ", first mistake at step " << *found->predicted_first_mistake;
        }
        std::cout << " (" << found->step_verdicts.size() << " steps evaluated)\n";
        for (const StepVerdict& s : found->step_verdicts) {
            std::cout << "\n=== step " << s.step_index << ": label " << s.step_label
                      << (s.label_forced ? " (forced by parse-failure policy)" : "") << " ===\n";
            for (const auto& [p, label] : s.principle_labels) {
                std::cout << "  principle " << principle_number(p) << ": " << to_string(label)
                          << '\n';
            }
            for (const RequestRecord& r : s.requests) {
                std::cout << "--- stage " << r.stage << " prompt (" << r.duration_ms
                          << " ms) ---\n"
                          << r.prompt << "\n--- stage " << r.stage << " response ---\n"
                          << r.response << '\n';
            }
            for (const auto& [p, text] : s.regenerated.segments) {
                std::cout << "--- regenerated G(" << principle_number(p) << ") ---\n"
                          << text << '\n';
            }
            for (const auto& [p, text] : s.extracted.segments) {
                std::cout << "--- extracted E(" << principle_number(p) << ") ---\n"
                          << text << '\n';
            }
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

int cmd_export_normalized(const CommonFlags& flags, const std::string& out_file) {
    try {
        CliConfig cfg = build_config(flags);
        if (cfg.data_path.empty()) throw ConfigError("no dataset path configured");
        if (!fs::exists(cfg.data_path)) {
            throw ConfigError("dataset file not found: " + cfg.data_path.string());
        }
        const std::vector<AnswerTrace> traces =
            cfg.dataset == DatasetName::BigBenchMistake ? load_bigbench(cfg.data_path)
                                                        : load_prm800k(cfg.data_path);
        write_normalized_jsonl(traces, out_file);
        std::cout << "wrote " << traces.size() << " normalized traces to " << out_file << '\n';
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PedCoT mathematical reasoning mistake finder"};
    app.require_subcommand(1);

    CommonFlags run_flags;
    CLI::App* run = app.add_subcommand("run", "Evaluate a dataset with a prompting strategy");
    add_run_flags(run, run_flags);

    CommonFlags score_flags;
    std::string predictions;
    bool score_json = false;
    CLI::App* score = app.add_subcommand("score", "Recompute metrics from a stored transcript");
    score->add_option("--predictions", predictions, "transcript.jsonl from a previous run")
        ->required();
    score->add_option("--dataset", score_flags.dataset, "Dataset name: bigbench | prm800k");
    score->add_option("--data-path", score_flags.data_path, "Dataset JSONL file");
    score->add_option("--config", score_flags.config_file, "Config file");
    score->add_flag("--json", score_json, "Emit metrics as JSON instead of a table");

    std::string inspect_run_dir;
    std::string inspect_trace;
    CLI::App* inspect = app.add_subcommand("inspect", "Print a human-readable trace transcript");
    inspect->add_option("--run", inspect_run_dir, "Run directory")->required();
    inspect->add_option("--trace", inspect_trace, "Trace id")->required();

    CommonFlags export_flags;
    std::string export_out;
    CLI::App* exp = app.add_subcommand("export-normalized",
                                       "Convert a source dataset to the normalized JSONL format");
    exp->add_option("--dataset", export_flags.dataset, "Dataset name: bigbench | prm800k");
    exp->add_option("--data-path", export_flags.data_path, "Dataset JSONL file");
    exp->add_option("--out", export_out, "Output JSONL file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_flags);
        if (score->parsed()) return cmd_score(predictions, score_flags, score_json);
        if (inspect->parsed()) return cmd_inspect(inspect_run_dir, inspect_trace);
        if (exp->parsed()) return cmd_export_normalized(export_flags, export_out);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitConfig;
}
