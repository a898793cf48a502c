#include "nlop/nlop.h"

#include "nlop/experiment.hpp"
#include "nlop/field.hpp"
#include "nlop/kernels.hpp"
#include "nlop/pv_quadrature.hpp"

#include <cstdlib>
#include <cstring>
#include <string>

struct nlop_kernel {
    nlop::KernelSpec spec;
};
struct nlop_field {
    nlop::Field u;
};
struct nlop_experiment {
    nlop::ExperimentConfig cfg;
};

namespace {

thread_local std::string g_last_error;

nlop_status fail(nlop_status s, const std::string& msg) {
    g_last_error = msg;
    return s;
}

template <class F>
nlop_status guarded(F&& f) {
    try {
        g_last_error.clear();
        return f();
    } catch (const nlop::ConfigError& e) {
        return fail(NLOP_ERR_CONFIG, e.what());
    } catch (const nlop::DomainError& e) {
        return fail(NLOP_ERR_DOMAIN, e.what());
    } catch (const nlop::ConvergenceError& e) {
        return fail(NLOP_ERR_CONVERGENCE, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(NLOP_ERR_CONFIG, e.what());
    } catch (const std::exception& e) {
        return fail(NLOP_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(NLOP_ERR_INTERNAL, "unknown error");
    }
}

char* dup_string(const std::string& s) {
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (p) std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

}  // namespace

extern "C" {

const char* nlop_version(void) { return "1.0.0"; }

const char* nlop_last_error(void) { return g_last_error.c_str(); }

void nlop_string_free(char* s) { std::free(s); }

nlop_status nlop_kernel_from_json(const char* json, nlop_kernel** out) {
    if (!json || !out) return fail(NLOP_ERR_NULL, "null argument");
    return guarded([&] {
        *out = new nlop_kernel{nlop::kernel_from_json(nlohmann::json::parse(json))};
        return NLOP_OK;
    });
}

void nlop_kernel_free(nlop_kernel* k) { delete k; }

nlop_status nlop_kernel_eval(const nlop_kernel* k, const double* y, double* out) {
    if (!k || !y || !out) return fail(NLOP_ERR_NULL, "null argument");
    return guarded([&] {
        nlop::Vec v{};
        for (int i = 0; i < k->spec.dim; ++i) v[i] = y[i];
        *out = nlop::eval_kernel(k->spec, v);
        return NLOP_OK;
    });
}

nlop_status nlop_field_gaussian(int dim, const double* center, double amplitude, double width, nlop_field** out) {
    if (!out) return fail(NLOP_ERR_NULL, "null argument");
    return guarded([&] {
        if (dim < 1 || dim > nlop::kMaxDim) throw nlop::ConfigError("dim must be 1, 2 or 3");
        if (!(width > 0.0)) throw nlop::ConfigError("width must be positive");
        nlop::Vec c{};
        if (center)
            for (int i = 0; i < dim; ++i) c[i] = center[i];
        *out = new nlop_field{nlop::gaussian_field(dim, c, amplitude, width)};
        return NLOP_OK;
    });
}

void nlop_field_free(nlop_field* f) { delete f; }

nlop_status nlop_eval_LK(const nlop_field* u, const nlop_kernel* k, const double* x, double eps_inner,
                         double rel_tol, double* value, double* err_estimate) {
    if (!u || !k || !x || !value) return fail(NLOP_ERR_NULL, "null argument");
    return guarded([&] {
        if (u->u.dim() != k->spec.dim) throw nlop::ConfigError("field and kernel dimensions differ");
        nlop::QuadratureConfig cfg;
        if (eps_inner > 0.0) cfg.eps_inner = eps_inner;
        if (rel_tol > 0.0) cfg.rel_tol = rel_tol;
        nlop::Vec p{};
        for (int i = 0; i < k->spec.dim; ++i) p[i] = x[i];
        const nlop::EvalResult r = nlop::eval_LK(u->u, k->spec, p, cfg);
        *value = r.value;
        if (err_estimate) *err_estimate = r.err_estimate;
        return NLOP_OK;
    });
}

nlop_status nlop_experiment_from_json(const char* json, nlop_experiment** out) {
    if (!json || !out) return fail(NLOP_ERR_NULL, "null argument");
    return guarded([&] {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(json, nullptr, true, true);
        } catch (const nlohmann::json::parse_error& e) {
            throw nlop::ConfigError(std::string("config: parse error: ") + e.what());
        }
        *out = new nlop_experiment{nlop::config_from_json(j)};
        return NLOP_OK;
    });
}

nlop_status nlop_experiment_from_file(const char* path, nlop_experiment** out) {
    if (!path || !out) return fail(NLOP_ERR_NULL, "null argument");
    return guarded([&] {
        *out = new nlop_experiment{nlop::load_config(path)};
        return NLOP_OK;
    });
}

void nlop_experiment_free(nlop_experiment* e) { delete e; }

nlop_status nlop_experiment_set_output_dir(nlop_experiment* e, const char* dir) {
    if (!e || !dir) return fail(NLOP_ERR_NULL, "null argument");
    e->cfg.output_dir = dir;
    return NLOP_OK;
}

nlop_status nlop_experiment_set_seed(nlop_experiment* e, uint64_t seed) {
    if (!e) return fail(NLOP_ERR_NULL, "null argument");
    e->cfg.seed = seed;
    return NLOP_OK;
}

nlop_status nlop_experiment_set_task(nlop_experiment* e, const char* task) {
    if (!e || !task) return fail(NLOP_ERR_NULL, "null argument");
    return guarded([&] {
        e->cfg.task = nlop::task_from_string(task);
        return NLOP_OK;
    });
}

nlop_status nlop_experiment_run(nlop_experiment* e, int* exit_code, int* passed, char** summary_json) {
    if (!e || !exit_code) return fail(NLOP_ERR_NULL, "null argument");
    return guarded([&] {
        const nlop::RunOutcome oc = nlop::run_experiment(e->cfg);
        *exit_code = oc.exit_code;
        if (passed) *passed = oc.passed ? 1 : 0;
        if (oc.exit_code != nlop::kExitOk) g_last_error = oc.message;
        if (summary_json) *summary_json = dup_string(nlop::to_json(oc).dump(2));
        return NLOP_OK;
    });
}

nlop_status nlop_verify_suite(const char* config_dir, const char* output_dir, int jobs, int64_t seed,
                              int* exit_code, char** matrix) {
    if (!config_dir || !output_dir || !exit_code) return fail(NLOP_ERR_NULL, "null argument");
    return guarded([&] {
        const nlop::SuiteResult r = nlop::verify_suite(config_dir, output_dir, jobs, seed);
        *exit_code = r.exit_code;
        if (matrix) *matrix = dup_string(nlop::format_matrix(r));
        return NLOP_OK;
    });
}

}  // extern "C"
