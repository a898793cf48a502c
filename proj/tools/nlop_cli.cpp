// nlop: batch front-end over the C API.
//   nlop run --config FILE [--output DIR] [--seed N] [--task NAME]
//   nlop verify-suite --config DIR [--output DIR] [--jobs N] [--seed N]
// NLOP_OUTPUT_DIR overrides the config's output directory; --output wins.

#include "nlop/nlop.h"

#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

namespace {

std::string output_override(const std::string& flag) {
    if (!flag.empty()) return flag;
    const char* env = std::getenv("NLOP_OUTPUT_DIR");
    return env ? env : "";
}

int status_exit(nlop_status s) {
    std::fprintf(stderr, "error: %s\n", nlop_last_error());
    return s == NLOP_ERR_CONFIG || s == NLOP_ERR_NULL ? 1 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonlocal operator experiments"};
    app.require_subcommand(1);

    std::string config, output, task;
    long long seed = -1;
    int jobs = 1;

    auto* run = app.add_subcommand("run", "Run one experiment config");
    run->add_option("--config", config, "Config file")->required();
    run->add_option("--output", output, "Output directory");
    run->add_option("--seed", seed, "RNG seed override")->check(CLI::NonNegativeNumber);
    run->add_option("--task", task, "Task override");
    run->add_option("--jobs", jobs, "Ignored for run")->check(CLI::PositiveNumber);

    auto* suite = app.add_subcommand("verify-suite", "Run every config in a directory");
    suite->add_option("--config", config, "Config directory")->required();
    suite->add_option("--output", output, "Output directory");
    suite->add_option("--jobs", jobs, "Concurrent tasks")->check(CLI::PositiveNumber);
    suite->add_option("--seed", seed, "RNG seed override")->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (run->parsed()) {
        nlop_experiment* e = nullptr;
        nlop_status s = nlop_experiment_from_file(config.c_str(), &e);
        if (s != NLOP_OK) return status_exit(s);
        const std::string out = output_override(output);
        if (!out.empty()) nlop_experiment_set_output_dir(e, out.c_str());
        if (seed >= 0) nlop_experiment_set_seed(e, static_cast<uint64_t>(seed));
        if (!task.empty() && (s = nlop_experiment_set_task(e, task.c_str())) != NLOP_OK) {
            nlop_experiment_free(e);
            return status_exit(s);
        }
        int code = 0, passed = 0;
        char* summary = nullptr;
        s = nlop_experiment_run(e, &code, &passed, &summary);
        nlop_experiment_free(e);
        if (s != NLOP_OK) return status_exit(s);
        std::printf("%s\n", summary);
        nlop_string_free(summary);
        if (code != 0) std::fprintf(stderr, "error: %s\n", nlop_last_error());
        return code;
    }

    std::string out = output_override(output);
    if (out.empty()) out = "suite_out";
    int code = 0;
    char* matrix = nullptr;
    const nlop_status s = nlop_verify_suite(config.c_str(), out.c_str(), jobs, seed, &code, &matrix);
    if (s != NLOP_OK) return status_exit(s);
    std::printf("%s", matrix);
    nlop_string_free(matrix);
    return code;
}
