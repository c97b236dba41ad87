#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "pedcot/datasets.hpp"
#include "pedcot/errors.hpp"
#include "pedcot/parser.hpp"
#include "pedcot/pipeline.hpp"

namespace pedcot {

// Merged run configuration: config file first, command-line flags on top.
// The file is a sectioned key/value document; unknown sections or keys are
// rejected so typos cannot silently fall back to defaults.
struct CliConfig {
    RunConfig run;
    DatasetName dataset = DatasetName::BigBenchMistake;
    std::filesystem::path data_path;
    std::filesystem::path templates_dir; // empty = built-in bundle
    std::filesystem::path fixtures_path; // mock mode
    std::filesystem::path cache_dir;     // live/replay; optional recorder for mock
    std::filesystem::path out_dir = "runs/out";
    int limit = 0; // evaluate only the first N traces; 0 = all
};

namespace detail {

inline int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected an integer, got \"" + value + "\"");
    }
}

inline double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got \"" + value + "\"");
    }
}

inline std::vector<std::string> split_csv(const std::string& value) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : value) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
    return out;
}

} // namespace detail

// Remove principles named in `ablate` (values 1|2|3) from the active set.
inline void apply_ablation(RunConfig& run, const std::vector<int>& ablate) {
    for (int k : ablate) {
        run.active_principles.erase(principle_from_number(k));
    }
    if (run.active_principles.empty()) {
        throw ConfigError("ablation removed every principle; at least one must stay active");
    }
}

// Apply one "section.key = value" setting. Shared by the file parser and
// the flag-override path so both accept exactly the same keys.
inline void config_set(CliConfig& cfg, const std::string& section, const std::string& key,
                       const std::string& value) {
    const std::string full = section + "." + key;
    try {
        if (section == "run") {
            if (key == "strategy") {
                cfg.run.strategy = strategy_from_string(value);
            } else if (key == "mode") {
                cfg.run.mode = mode_from_string(value);
            } else if (key == "parallel") {
                cfg.run.parallel_traces = detail::parse_int(full, value);
            } else if (key == "on_parse_failure") {
                cfg.run.on_parse_failure = parse_failure_policy_from_string(value);
            } else if (key == "ablate") {
                std::vector<int> ks;
                for (const std::string& s : detail::split_csv(value)) {
                    ks.push_back(detail::parse_int(full, s));
                }
                apply_ablation(cfg.run, ks);
            } else if (key == "limit") {
                cfg.limit = detail::parse_int(full, value);
            } else {
                throw ConfigError("unknown key: " + full);
            }
        } else if (section == "model") {
            if (key == "name") {
                cfg.run.model.model_name = value;
            } else if (key == "provider") {
                cfg.run.model.provider = value;
            } else if (key == "temperature") {
                cfg.run.model.temperature = detail::parse_double(full, value);
            } else if (key == "max_output_tokens") {
                cfg.run.model.max_output_tokens = detail::parse_int(full, value);
            } else if (key == "base_url") {
                cfg.run.model.base_url = value;
            } else if (key == "api_key_env") {
                cfg.run.model.api_key_ref = value;
            } else if (key == "timeout_seconds") {
                cfg.run.model.timeout_seconds = detail::parse_double(full, value);
            } else if (key == "max_retries") {
                cfg.run.model.max_retries = detail::parse_int(full, value);
            } else if (key == "requests_per_minute") {
                cfg.run.model.requests_per_minute = detail::parse_int(full, value);
            } else {
                throw ConfigError("unknown key: " + full);
            }
        } else if (section == "dataset") {
            if (key == "name") {
                cfg.dataset = dataset_from_string(value);
            } else if (key == "path") {
                cfg.data_path = value;
            } else {
                throw ConfigError("unknown key: " + full);
            }
        } else if (section == "paths") {
            if (key == "templates") {
                cfg.templates_dir = value;
            } else if (key == "fixtures") {
                cfg.fixtures_path = value;
            } else if (key == "cache_dir") {
                cfg.cache_dir = value;
            } else if (key == "out") {
                cfg.out_dir = value;
            } else {
                throw ConfigError("unknown key: " + full);
            }
        } else {
            throw ConfigError("unknown section: [" + section + "]");
        }
    } catch (const InvalidInput& e) {
        throw ConfigError(full + ": " + e.what());
    }
}

// Parse a sectioned key/value config file. Lines are "key = value" under a
// "[section]" header; '#' starts a comment.
inline CliConfig parse_config_file(const std::filesystem::path& path, CliConfig cfg = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string text = detail::trim(line);
        if (text.empty()) continue;
        if (text.front() == '[') {
            if (text.back() != ']') {
                throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                                  ": malformed section header");
            }
            section = detail::trim(text.substr(1, text.size() - 2));
            continue;
        }
        const std::size_t eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": expected key = value");
        }
        if (section.empty()) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": key outside any [section]");
        }
        const std::string key = detail::trim(text.substr(0, eq));
        const std::string value = detail::trim(text.substr(eq + 1));
        config_set(cfg, section, key, value);
    }
    return cfg;
}

// Serialize the effective configuration back out (run-directory snapshot).
inline std::string config_to_string(const CliConfig& cfg) {
    std::string ablated;
    for (PrincipleId p : kAllPrinciples) {
        if (cfg.run.active_principles.count(p) == 0) {
            if (!ablated.empty()) ablated += ",";
            ablated += std::to_string(principle_number(p));
        }
    }
    std::string out;
    out += "[run]\n";
    out += "strategy = " + std::string(to_string(cfg.run.strategy)) + "\n";
    out += "mode = " + std::string(to_string(cfg.run.mode)) + "\n";
    out += "parallel = " + std::to_string(cfg.run.parallel_traces) + "\n";
    out += "on_parse_failure = " + std::string(to_string(cfg.run.on_parse_failure)) + "\n";
    if (!ablated.empty()) out += "ablate = " + ablated + "\n";
    if (cfg.limit > 0) out += "limit = " + std::to_string(cfg.limit) + "\n";
    out += "\n[model]\n";
    out += "name = " + cfg.run.model.model_name + "\n";
    out += "provider = " + cfg.run.model.provider + "\n";
    char tmp[64];
    std::snprintf(tmp, sizeof tmp, "%g", cfg.run.model.temperature);
    out += "temperature = " + std::string(tmp) + "\n";
    out += "max_output_tokens = " + std::to_string(cfg.run.model.max_output_tokens) + "\n";
    out += "base_url = " + cfg.run.model.base_url + "\n";
    out += "api_key_env = " + cfg.run.model.api_key_ref + "\n";
    std::snprintf(tmp, sizeof tmp, "%g", cfg.run.model.timeout_seconds);
    out += "timeout_seconds = " + std::string(tmp) + "\n";
    out += "max_retries = " + std::to_string(cfg.run.model.max_retries) + "\n";
    out += "requests_per_minute = " + std::to_string(cfg.run.model.requests_per_minute) + "\n";
    out += "\n[dataset]\n";
    out += "name = " + std::string(to_string(cfg.dataset)) + "\n";
    out += "path = " + cfg.data_path.string() + "\n";
    out += "\n[paths]\n";
    if (!cfg.templates_dir.empty()) out += "templates = " + cfg.templates_dir.string() + "\n";
    if (!cfg.fixtures_path.empty()) out += "fixtures = " + cfg.fixtures_path.string() + "\n";
    if (!cfg.cache_dir.empty()) out += "cache_dir = " + cfg.cache_dir.string() + "\n";
    out += "out = " + cfg.out_dir.string() + "\n";
    return out;
}

// Full pre-flight validation; every problem is reported before any request
// could be sent.
inline void validate_cli_config(const CliConfig& cfg, bool needs_dataset = true) {
    cfg.run.validate();
    if (needs_dataset) {
        if (cfg.data_path.empty()) throw ConfigError("no dataset path configured");
        if (!std::filesystem::exists(cfg.data_path)) {
            throw ConfigError("dataset file not found: " + cfg.data_path.string());
        }
    }
    if (cfg.limit < 0) throw ConfigError("limit must be non-negative");
    switch (cfg.run.mode) {
        case Mode::Replay:
            if (cfg.cache_dir.empty()) {
                throw ConfigError("replay mode requires a cache directory (--cache-dir)");
            }
            if (!std::filesystem::is_directory(cfg.cache_dir)) {
                throw ConfigError("cache directory not found: " + cfg.cache_dir.string());
            }
            break;
        case Mode::Mock:
            if (cfg.fixtures_path.empty()) {
                throw ConfigError("mock mode requires a fixture file (--fixtures)");
            }
            if (!std::filesystem::exists(cfg.fixtures_path)) {
                throw ConfigError("fixture file not found: " + cfg.fixtures_path.string());
            }
            break;
        case Mode::Live: {
            if (cfg.cache_dir.empty()) {
                throw ConfigError("live mode requires a cache directory (--cache-dir) to record "
                                  "responses");
            }
            const char* key = std::getenv(cfg.run.model.api_key_ref.c_str());
            if (!key || !*key) {
                throw ConfigError("live mode requires a credential in $" +
                                  cfg.run.model.api_key_ref);
            }
            break;
        }
    }
    if (!cfg.templates_dir.empty() && !std::filesystem::is_directory(cfg.templates_dir)) {
        throw ConfigError("template bundle directory not found: " + cfg.templates_dir.string());
    }
}

} // namespace pedcot
