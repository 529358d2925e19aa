#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "punctlab/core.hpp"
#include "punctlab/oracles.hpp"

namespace punctlab {

// Exit codes of the punctlab tool.
constexpr int kExitOk = 0;
constexpr int kExitViolation = 2;
constexpr int kExitConfig = 3;
constexpr int kExitArtifacts = 4;

class MissingArtifact : public Error {
public:
    using Error::Error;
};

const std::vector<std::string>& construction_names();

struct RunConfig {
    std::string construction;
    Stage horizon = 0;
    nlohmann::ordered_json body;  // construction fields, without "construction" and "horizon"
};

// `construction` and `horizon` override the file's fields when non-empty / non-zero.
// Validates the fields against the construction; throws ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j, const std::string& construction = {}, Stage horizon = 0);
RunConfig load_run_config(const std::filesystem::path& path, const std::string& construction = {},
                          Stage horizon = 0);

struct RunOptions {
    bool dot = false;
    std::string d2_variant;  // overrides the config's variant
};

// Builds and writes logs (*.jsonl), meta.json and trace.jsonl into `dir`. Returns the file names.
std::vector<std::string> run(const RunConfig& cfg, const std::filesystem::path& dir, const RunOptions& opt = {});

// The construction's trace as JSONL, built in memory.
std::string trace_text(const RunConfig& cfg);

// Reads meta.json and the logs from `dir` and runs the module checks. "pass" holds the verdict.
nlohmann::ordered_json verify_dir(const std::filesystem::path& dir);

// what: d1, d2, d3 or pressing-g.
nlohmann::ordered_json decode_dir(const std::string& what, const std::filesystem::path& dir, Nat x);

// Orbit decomposition and character of a unary log truncated after `stages` stages (0 = all).
nlohmann::ordered_json analyze_log(const std::filesystem::path& log, Stage stages = 0);

// DOT digraph of every symbol of a truncation.
std::string to_dot(const Truncation& t, const Signature& sig, const std::string& name);

}  // namespace punctlab
