#include "nlop/experiment.hpp"
#include "nlop/nlop.h"
#include "nlop/pv_quadrature.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace nlop;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = NLOP_SOURCE_DIR;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "nlop_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args, const fs::path& log, const std::string& env = "") {
    const std::string cmd = env + " \"" + std::string(NLOP_CLI_PATH) + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("SHA-256 test vectors") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("config round trip and validation messages") {
    const auto cfg = load_config((kSource / "configs/suite/t1_2ii_nonlinear_n1.json").string());
    const auto back = config_from_json(to_json(cfg));
    CHECK(to_json(back) == to_json(cfg));

    auto j = to_json(cfg);
    j["kernel"]["alpha"] = 2.5;
    CHECK_THROWS_WITH_AS(config_from_json(j), "kernel: alpha must lie in (0,2)", ConfigError);
    j = to_json(cfg);
    j["task"] = "Nope";
    CHECK_THROWS_AS(config_from_json(j), ConfigError);
    j = to_json(cfg);
    j.erase("domain");
    j["task"] = "SolveBall";
    CHECK(run_experiment(config_from_json(j)).exit_code == kExitValidation);
}

TEST_CASE("CheckKernel on the exponential kernel reports K1 false") {
    auto cfg = load_config((kSource / "configs/examples/check_exponential.json").string());
    const fs::path out = scratch("check_exp");
    cfg.output_dir = out.string();
    const auto r = run_experiment(cfg);
    CHECK(r.exit_code == kExitOk);
    CHECK(r.passed);
    const auto rep = read_json(out / "kernel_report.json");
    bool found = false;
    for (const auto& c : rep.at("conditions"))
        if (c.at("condition") == "K1") {
            found = true;
            CHECK(c.at("holds") == false);
        }
    CHECK(found);
}

TEST_CASE("SolveBall with zero right-hand side, manifest hashes and determinism") {
    auto cfg = load_config((kSource / "configs/examples/solve_zero_rhs.json").string());
    const fs::path a = scratch("solve_a"), b = scratch("solve_b");
    cfg.output_dir = a.string();
    const auto ra = run_experiment(cfg);
    cfg.output_dir = b.string();
    const auto rb = run_experiment(cfg);
    REQUIRE(ra.exit_code == kExitOk);
    CHECK(ra.passed);
    REQUIRE_FALSE(ra.files.empty());
    CHECK(ra.files.back() == "manifest.json");

    const auto g = read_grid((a / "solution.grid").string());
    for (double v : g.samples) CHECK(v == 0.0);

    const auto man = read_json(a / "manifest.json");
    for (const auto& f : man.at("files")) {
        const fs::path p = a / f.at("file").get<std::string>();
        CHECK(f.at("sha256") == sha256_file(p.string()));
        CHECK(f.at("bytes").get<std::uintmax_t>() == fs::file_size(p));
    }
    // The manifest records output_dir; the hashed artifacts must agree.
    CHECK(man.at("files") == read_json(b / "manifest.json").at("files"));
}

TEST_CASE("numeric failures map to exit code 2") {
    auto cfg = load_config((kSource / "configs/examples/solve_zero_rhs.json").string());
    cfg.output_dir = scratch("solve_fail").string();
    cfg.nonlinearity = with_constant_f(make_identity_g(), 1.0);
    cfg.params["max_iter"] = 0;
    cfg.params["tol"] = 1e-30;
    const auto r = run_experiment(cfg);
    CHECK((r.exit_code == kExitNumeric || r.exit_code == kExitValidation));
}

TEST_CASE("suite runner") {
    const fs::path empty = scratch("empty_suite");
    const auto e = verify_suite(empty.string(), scratch("empty_out").string(), 1);
    CHECK(e.exit_code == kExitValidation);
    CHECK(format_matrix(e).find("no configs found") != std::string::npos);

    const auto r = verify_suite((kSource / "configs/suite_failing").string(), scratch("failing_out").string(), 2);
    CHECK(r.exit_code != kExitOk);
    int failing = 0;
    for (const auto& row : r.rows)
        if (!row.passed) {
            ++failing;
            CHECK(row.config == "k_non_even_kernel.json");
            CHECK(row.label == "K.even");
        }
    CHECK(failing == 1);
    CHECK(fs::exists(fs::path(scratch("failing_out").parent_path() / "failing_out")));
}

TEST_CASE("suite determinism across job counts") {
    const fs::path o1 = scratch("det1"), o3 = scratch("det3");
    verify_suite((kSource / "configs/suite_failing").string(), o1.string(), 1);
    verify_suite((kSource / "configs/suite_failing").string(), o3.string(), 3);
    for (const auto& entry : fs::recursive_directory_iterator(o1)) {
        if (!entry.is_regular_file()) continue;
        const fs::path rel = fs::relative(entry.path(), o1);
        REQUIRE(fs::exists(o3 / rel));
        if (rel.filename() == "manifest.json")
            CHECK(read_json(entry.path()).at("files") == read_json(o3 / rel).at("files"));
        else if (rel.filename() != "suite.json")
            CHECK_MESSAGE(sha256_file(entry.path().string()) == sha256_file((o3 / rel).string()), rel.string());
    }
}

TEST_CASE("C API") {
    CHECK(std::string(nlop_version()).size() > 0);
    nlop_kernel* k = nullptr;
    CHECK(nlop_kernel_from_json(nullptr, &k) == NLOP_ERR_NULL);
    CHECK(nlop_kernel_from_json(R"({"kind":"PowerLaw","dim":1,"alpha":2.5})", &k) == NLOP_ERR_CONFIG);
    CHECK(std::string(nlop_last_error()) == "alpha must lie in (0,2)");
    CHECK(nlop_kernel_from_json("{not json", &k) == NLOP_ERR_CONFIG);

    REQUIRE(nlop_kernel_from_json(R"({"kind":"PowerLaw","dim":1,"alpha":1.0})", &k) == NLOP_OK);
    double y = 2.0, v = 0.0;
    CHECK(nlop_kernel_eval(k, &y, &v) == NLOP_OK);
    CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
    y = 0.0;
    CHECK(nlop_kernel_eval(k, &y, &v) == NLOP_ERR_DOMAIN);

    nlop_field* u = nullptr;
    const double c = 0.0;
    REQUIRE(nlop_field_gaussian(1, &c, 1.0, 1.0, &u) == NLOP_OK);
    double val = 0.0, err = 0.0;
    const double x = 0.1;
    CHECK(nlop_eval_LK(u, k, &x, 0.0, 0.0, &val, &err) == NLOP_OK);
    const double ref = eval_LK(gaussian_field(1), make_power_law(1, 1.0), Vec{0.1}, QuadratureConfig{}).value;
    CHECK(val == ref);
    nlop_field_free(u);
    nlop_kernel_free(k);

    nlop_experiment* e = nullptr;
    REQUIRE(nlop_experiment_from_file((kSource / "configs/examples/check_exponential.json").c_str(), &e) == NLOP_OK);
    CHECK(nlop_experiment_set_task(e, "Bogus") == NLOP_ERR_CONFIG);
    CHECK(nlop_experiment_set_output_dir(e, scratch("capi_run").c_str()) == NLOP_OK);
    int code = -1, passed = 0;
    char* summary = nullptr;
    CHECK(nlop_experiment_run(e, &code, &passed, &summary) == NLOP_OK);
    CHECK(code == 0);
    CHECK(passed == 1);
    REQUIRE(summary != nullptr);
    CHECK(nlohmann::json::parse(summary).at("exit_code") == 0);
    nlop_string_free(summary);
    nlop_experiment_free(e);
    CHECK(nlop_experiment_run(nullptr, &code, &passed, nullptr) == NLOP_ERR_NULL);
}

TEST_CASE("command line") {
    const fs::path log = scratch("cli") / "log.txt";
    const fs::path ex = kSource / "configs/examples";

    CHECK(run_cli("run --config \"" + (ex / "bad_alpha.json").string() + "\" --output \"" + scratch("cli_bad").string() + "\"", log) == 1);
    CHECK(slurp(log).find("alpha must lie in (0,2)") != std::string::npos);

    const fs::path o = scratch("cli_ok");
    CHECK(run_cli("run --config \"" + (ex / "check_exponential.json").string() + "\" --output \"" + o.string() + "\"", log) == 0);
    CHECK(fs::exists(o / "kernel_report.json"));
    CHECK(fs::exists(o / "manifest.json"));

    // NLOP_OUTPUT_DIR applies when --output is absent.
    const fs::path env_dir = scratch("cli_env");
    CHECK(run_cli("run --config \"" + (ex / "check_exponential.json").string() + "\"", log, "NLOP_OUTPUT_DIR=\"" + env_dir.string() + "\"") == 0);
    CHECK(fs::exists(env_dir / "manifest.json"));

    CHECK(run_cli("verify-suite --config \"" + scratch("cli_empty").string() + "\" --output \"" + scratch("cli_empty_out").string() + "\"", log) == 1);
    CHECK(run_cli("run --config /nonexistent/config.json", log) == 1);
    CHECK(run_cli("bogus-command", log) == 1);
}
