#pragma once

// Config-driven runs: one task per config, artifacts in the output directory
// and a manifest with SHA-256 content hashes. The suite runner executes a
// directory of configs and groups verdicts by theorem label.

#include "nlop/kernels.hpp"
#include "nlop/nonlinearity.hpp"
#include "nlop/pv_quadrature.hpp"
#include "nlop/solver.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace nlop {

enum class Task { CheckKernel, EvalOperator, SolveBall, VerifySymmetry, SweepAlpha, NarrowRegion, DecayInfinity };
std::string to_string(Task t);
Task task_from_string(const std::string& s);

struct ExperimentConfig {
    Task task = Task::CheckKernel;
    std::string label;  // theorem label for the suite matrix
    KernelSpec kernel;
    std::optional<NonlinearitySpec> nonlinearity;
    std::optional<DomainSpec> domain;
    QuadratureConfig quadrature;
    std::string output_dir = "out";
    std::uint64_t seed = 1;
    nlohmann::json params = nlohmann::json::object();  // task-specific section
};

/// Throws ConfigError naming the offending key.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumeric = 2;

struct RunOutcome {
    int exit_code = kExitOk;
    bool passed = false;  // task verdict
    bool partial = false;
    std::string message;
    std::vector<std::string> files;  // relative to output_dir, manifest last
    nlohmann::json summary = nlohmann::json::object();
};

nlohmann::json to_json(const RunOutcome& r);

/// Runs one task. Never throws for config or numeric errors; those map to
/// exit codes 1 and 2.
RunOutcome run_experiment(const ExperimentConfig& cfg);

std::string sha256_file(const std::string& path);
std::string sha256_hex(const std::string& bytes);

struct SuiteRow {
    std::string config;  // file name
    std::string label;
    std::string task;
    bool passed = false;
    int exit_code = 0;
    std::string message;
};

struct SuiteResult {
    std::vector<SuiteRow> rows;  // sorted by config name
    int exit_code = kExitOk;
};

nlohmann::json to_json(const SuiteResult& r);

/// Runs every *.json config in config_dir with at most `jobs` concurrent
/// tasks; each config writes to output_dir/<config stem>. An empty directory
/// gives exit 1; any failing row gives a nonzero exit. seed >= 0 overrides
/// the configs' seeds.
SuiteResult verify_suite(const std::string& config_dir, const std::string& output_dir, int jobs,
                         std::int64_t seed = -1);

/// Pass/fail matrix keyed by theorem label, one line per config.
std::string format_matrix(const SuiteResult& r);

}  // namespace nlop
