#include "stochls/stochls.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <cstring>
#include <limits>
#include <memory>
#include <string>

#include "core/config.hpp"
#include "core/csv.hpp"
#include "core/errors.hpp"
#include "core/experiment.hpp"
#include "core/linesearch.hpp"
#include "core/oracle.hpp"
#include "core/rrprocess.hpp"
#include "core/sampling.hpp"
#include "json.hpp"

using nlohmann::json;
using namespace stochls;

struct stochls_problem {
  std::shared_ptr<const Problem> problem;
};

struct stochls_optimizer {
  std::shared_ptr<const Problem> problem;
  LineSearchConfig cfg;
  StepContext ctx;
  IterateState state;
  RandomSource rng{0};
};

namespace {

thread_local std::string last_error;

stochls_status fail(stochls_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <class F>
stochls_status guarded(F&& body) {
  last_error.clear();
  try {
    return body();
  } catch (const ConfigError& e) {
    return fail(STOCHLS_CONFIG, e.what());
  } catch (const json::exception& e) {
    return fail(STOCHLS_CONFIG, e.what());
  } catch (const NumericalAbort& e) {
    return fail(STOCHLS_RUNTIME, e.what());
  } catch (const std::domain_error& e) {
    return fail(STOCHLS_DOMAIN, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(STOCHLS_INVALID_ARGUMENT, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(STOCHLS_IO, e.what());
  } catch (const std::exception& e) {
    return fail(STOCHLS_RUNTIME, e.what());
  } catch (...) {
    return fail(STOCHLS_RUNTIME, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse_json(const char* text) {
  try {
    return json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("JSON parse error: ") + e.what());
  }
}

Overrides parse_overrides(const char* text) {
  Overrides ov;
  if (!text || !*text) return ov;
  const json j = parse_json(text);
  if (!j.is_object()) throw ConfigError("overrides: expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "seeds") ov.seeds = parse_seed_list(it->get<std::string>());
    else if (k == "output_dir") ov.output_dir = it->get<std::string>();
    else if (k == "workers") ov.workers = it->get<int>();
    else if (k == "exact_diagnostics") ov.exact_diagnostics = it->get<bool>();
    else throw ConfigError("overrides: unknown key '" + k + "'");
  }
  return ov;
}

stochls_status run_parsed(ExperimentConfig cfg, const char* overrides_json, char** report) {
  apply_overrides(cfg, parse_overrides(overrides_json));
  try {
    std::string text;
    stochls_status st = STOCHLS_OK;
    switch (cfg.mode) {
      case Mode::optimize: {
        const OptimizeResult r = run_optimize(cfg);
        text = r.report;
        for (const auto& s : r.seeds) {
          if (s.aborted) {
            const std::string msg = "seed " + std::to_string(s.seed) + " aborted: " + s.abort_reason +
                                    " (trace: traces/seed_" + std::to_string(s.seed) + ".csv)";
            error_record(cfg.output_dir, 3, "NumericalAbort", msg);
            last_error = msg;
            st = STOCHLS_RUNTIME;
            break;
          }
        }
        break;
      }
      case Mode::rrprocess: text = run_rrprocess(cfg).report; break;
      case Mode::lemma_suite: {
        cfg.validate();
        const LemmaReport lr = lemma_suite(cfg.lemma_instances, cfg.lemma_seed);
        text = lr.text();
        if (!cfg.output_dir.empty()) write_text_file(cfg.output_dir + "/report.txt", text);
        if (!lr.all_passed()) {
          last_error = "lemma checks failed";
          st = STOCHLS_RUNTIME;
        }
        break;
      }
    }
    if (report) *report = dup_string(text);
    return st;
  } catch (const ConfigError& e) {
    error_record(cfg.output_dir, 2, "ConfigError", e.what());
    throw;
  } catch (const std::exception& e) {
    error_record(cfg.output_dir, 3, "RuntimeError", e.what());
    throw;
  }
}

// config errors land in the override output directory when the config never loaded
template <class Load>
stochls_status run_loaded(Load&& load, const char* overrides_json, char** report) {
  const Overrides ov = parse_overrides(overrides_json);
  ExperimentConfig cfg;
  try {
    cfg = load();
  } catch (const std::exception& e) {
    const bool config_kind = dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const json::exception*>(&e);
    if (ov.output_dir) error_record(*ov.output_dir, config_kind ? 2 : 3, config_kind ? "ConfigError" : "RuntimeError",
                                    e.what());
    throw;
  }
  return run_parsed(std::move(cfg), overrides_json, report);
}

}  // namespace

extern "C" {

const char* stochls_last_error(void) { return last_error.c_str(); }

const char* stochls_version(void) { return "1.0.0"; }

void stochls_string_free(char* s) { std::free(s); }

stochls_status stochls_problem_create(const char* kind, int64_t n, int64_t N, uint64_t seed, stochls_problem** out) {
  return guarded([&] {
    if (!kind || !out) return fail(STOCHLS_INVALID_ARGUMENT, "null argument");
    auto* p = new stochls_problem{make_builtin(parse_problem_kind(kind), n, N, seed)};
    *out = p;
    return STOCHLS_OK;
  });
}

stochls_status stochls_problem_create_json(const char* config_json, stochls_problem** out) {
  return guarded([&] {
    if (!config_json || !out) return fail(STOCHLS_INVALID_ARGUMENT, "null argument");
    const ExperimentConfig cfg = parse_config(parse_json(config_json));
    *out = new stochls_problem{make_builtin(cfg.problem)};
    return STOCHLS_OK;
  });
}

void stochls_problem_destroy(stochls_problem* p) { delete p; }

stochls_status stochls_problem_dimension(const stochls_problem* p, int64_t* n, int64_t* N) {
  return guarded([&] {
    if (!p) return fail(STOCHLS_INVALID_ARGUMENT, "null problem");
    if (n) *n = p->problem->dimension();
    if (N) *N = p->problem->component_count();
    return STOCHLS_OK;
  });
}

stochls_status stochls_problem_x0(const stochls_problem* p, double* x0) {
  return guarded([&] {
    if (!p || !x0) return fail(STOCHLS_INVALID_ARGUMENT, "null argument");
    const Vec& v = p->problem->metadata().x0;
    std::memcpy(x0, v.data(), sizeof(double) * static_cast<size_t>(v.size()));
    return STOCHLS_OK;
  });
}

stochls_status stochls_problem_value(const stochls_problem* p, const double* x, double* out) {
  return guarded([&] {
    if (!p || !x || !out) return fail(STOCHLS_INVALID_ARGUMENT, "null argument");
    const Vec v = Eigen::Map<const Vec>(x, p->problem->dimension());
    *out = exact_value(*p->problem, v);
    return STOCHLS_OK;
  });
}

stochls_status stochls_problem_gradient(const stochls_problem* p, const double* x, double* grad) {
  return guarded([&] {
    if (!p || !x || !grad) return fail(STOCHLS_INVALID_ARGUMENT, "null argument");
    const int64_t n = p->problem->dimension();
    const Vec g = exact_gradient(*p->problem, Eigen::Map<const Vec>(x, n));
    std::memcpy(grad, g.data(), sizeof(double) * static_cast<size_t>(n));
    return STOCHLS_OK;
  });
}

stochls_status stochls_problem_metadata_json(const stochls_problem* p, char** out) {
  return guarded([&] {
    if (!p || !out) return fail(STOCHLS_INVALID_ARGUMENT, "null argument");
    const ProblemMetadata& m = p->problem->metadata();
    json j;
    j["kind"] = p->problem->kind();
    j["L"] = m.lipschitz_L;
    j["f_min"] = m.f_min;
    j["variance_bound_grad"] = m.variance_bound_grad;
    j["variance_bound_fun"] = m.variance_bound_fun;
    j["convexity"] = to_string(m.convexity);
    j["mu"] = m.strong_convexity_mu;
    j["region_radius"] = m.region_radius;
    j["f_star"] = m.f_star ? json(*m.f_star) : json(nullptr);
    j["grad_bound_Lf"] = m.grad_bound_Lf ? json(*m.grad_bound_Lf) : json(nullptr);
    j["domain_diameter_D"] = m.domain_diameter_D ? json(*m.domain_diameter_D) : json(nullptr);
    *out = dup_string(j.dump());
    return STOCHLS_OK;
  });
}

stochls_status stochls_optimizer_create(const stochls_problem* p, const char* config_json, uint64_t seed,
                                        int exact_diagnostics, stochls_optimizer** out) {
  return guarded([&] {
    if (!p || !out) return fail(STOCHLS_INVALID_ARGUMENT, "null argument");
    ExperimentConfig cfg;
    if (config_json && *config_json) cfg = parse_config(parse_json(config_json));
    cfg.problem.n = p->problem->dimension();
    auto o = std::make_unique<stochls_optimizer>();
    o->problem = p->problem;
    o->cfg = resolve_linesearch(cfg, p->problem->metadata());
    if (cfg.linesearch.direction_mode == DirectionMode::general && cfg.scaling_diag) {
      if (static_cast<int64_t>(cfg.scaling_diag->size()) != cfg.problem.n)
        throw ConfigError("linesearch.scaling_diag must have n entries");
      const Vec d = Eigen::Map<const Vec>(cfg.scaling_diag->data(), cfg.problem.n);
      o->ctx.provider = scaled_newton_provider(d.asDiagonal().toDenseMatrix());
    }
    o->ctx.problem = o->problem.get();
    o->ctx.cfg = &o->cfg;
    o->ctx.exact_diagnostics = exact_diagnostics != 0;
    o->state = initial_state(o->cfg, p->problem->metadata().x0);
    o->rng = RandomSource(seed).fork("run");
    *out = o.release();
    return STOCHLS_OK;
  });
}

void stochls_optimizer_destroy(stochls_optimizer* o) { delete o; }

stochls_status stochls_optimizer_step(stochls_optimizer* o, stochls_step_info* info) {
  return guarded([&] {
    if (!o) return fail(STOCHLS_INVALID_ARGUMENT, "null optimizer");
    const StepRecord r = step(o->state, o->ctx, o->rng);
    if (info) {
      *info = stochls_step_info{};
      info->k = r.k;
      info->outcome = static_cast<int>(r.outcome);
      info->alpha = r.alpha;
      info->delta = std::sqrt(r.delta_sq);
      info->g_norm = r.g_norm;
      info->f0 = r.f0;
      info->fs = r.fs;
      info->grad_batch = r.grad_batch;
      info->f0_batch = r.f0_batch;
      info->fs_batch = r.fs_batch;
      if (r.exact) {
        info->has_exact = 1;
        info->f_exact = r.exact->f_exact;
        info->gradnorm_exact = r.exact->gradnorm_exact;
        info->i_k = r.exact->i_k;
        info->j_k = r.exact->j_k;
      }
    }
    return STOCHLS_OK;
  });
}

stochls_status stochls_optimizer_state(const stochls_optimizer* o, double* x, double* alpha, double* delta,
                                       int64_t* k) {
  return guarded([&] {
    if (!o) return fail(STOCHLS_INVALID_ARGUMENT, "null optimizer");
    if (x) std::memcpy(x, o->state.x.data(), sizeof(double) * static_cast<size_t>(o->state.x.size()));
    if (alpha) *alpha = o->state.alpha;
    if (delta) *delta = std::sqrt(o->state.delta_sq);
    if (k) *k = o->state.k;
    return STOCHLS_OK;
  });
}

stochls_status stochls_gradient_sample_size(double variance_grad, double kappa_g, double p_g, double alpha,
                                            double g_norm, int64_t* out) {
  return guarded([&] {
    if (!out) return fail(STOCHLS_INVALID_ARGUMENT, "null argument");
    AccuracyConfig acc;
    acc.kappa_g = kappa_g;
    acc.p_g = p_g;
    acc.validate();
    *out = gradient_sample_size(variance_grad, acc, alpha, g_norm, std::numeric_limits<int64_t>::max());
    return STOCHLS_OK;
  });
}

stochls_status stochls_function_sample_size(double variance_fun, double kappa_f, double kappa_f_bar, double p_f,
                                            double theta, double alpha, double g_norm, double delta, int64_t* out) {
  return guarded([&] {
    if (!out) return fail(STOCHLS_INVALID_ARGUMENT, "null argument");
    AccuracyConfig acc;
    acc.kappa_f = kappa_f;
    acc.kappa_f_bar = kappa_f_bar;
    acc.p_f = p_f;
    acc.theta = theta;
    acc.validate();
    *out = function_sample_size(variance_fun, acc, alpha, g_norm, delta, std::numeric_limits<int64_t>::max());
    return STOCHLS_OK;
  });
}

stochls_status stochls_rr_estimate(const char* rrprocess_json, uint64_t seed, int workers, double* mean,
                                   double* ci_lo, double* ci_hi, double* bound) {
  return guarded([&] {
    if (!rrprocess_json) return fail(STOCHLS_INVALID_ARGUMENT, "null argument");
    json j;
    j["schema_version"] = kSchemaVersion;
    j["mode"] = "rrprocess";
    j["rrprocess"] = parse_json(rrprocess_json);
    ExperimentConfig cfg = parse_config(j);
    cfg.validate();
    const StopEstimate e = estimate_expected_stop(cfg.cells.front().cfg, seed, workers < 1 ? 1 : workers);
    if (mean) *mean = e.mean;
    if (ci_lo) *ci_lo = e.ci_lo;
    if (ci_hi) *ci_hi = e.ci_hi;
    if (bound) *bound = e.bound;
    return STOCHLS_OK;
  });
}

stochls_status stochls_run_config_file(const char* path, const char* overrides_json, char** report) {
  return guarded([&] {
    if (!path) return fail(STOCHLS_INVALID_ARGUMENT, "null path");
    return run_loaded([&] { return load_config(path); }, overrides_json, report);
  });
}

stochls_status stochls_run_config_json(const char* config_json, const char* overrides_json, char** report) {
  return guarded([&] {
    if (!config_json) return fail(STOCHLS_INVALID_ARGUMENT, "null config");
    return run_loaded([&] { return parse_config(parse_json(config_json)); }, overrides_json, report);
  });
}

stochls_status stochls_lemma_suite(int instances, uint64_t seed, char** report, int* all_passed) {
  return guarded([&] {
    const LemmaReport r = lemma_suite(instances, seed);
    if (report) *report = dup_string(r.text());
    if (all_passed) *all_passed = r.all_passed() ? 1 : 0;
    return STOCHLS_OK;
  });
}

stochls_status stochls_report_directory(const char* dir, char** report) {
  return guarded([&] {
    if (!dir) return fail(STOCHLS_INVALID_ARGUMENT, "null path");
    const std::string text = report_directory(dir);
    if (report) *report = dup_string(text);
    return STOCHLS_OK;
  });
}

}  // extern "C"
