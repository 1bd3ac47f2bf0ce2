#include "core/experiment.hpp"

#include <fmt/format.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "core/csv.hpp"
#include "core/errors.hpp"
#include "json.hpp"

namespace stochls {

using nlohmann::json;

namespace {

// Runs body(i) for i in [0, count) on up to `workers` threads; rethrows the first failure.
template <class F>
void parallel_for(int64_t count, int workers, F&& body) {
  const int nw = std::max(1, std::min<int>(workers, static_cast<int>(std::max<int64_t>(1, count))));
  if (nw == 1) {
    for (int64_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int64_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto work = [&] {
    for (;;) {
      const int64_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < nw; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string b01(bool b) { return b ? "1" : "0"; }

Regime resolve_regime(const ExperimentConfig& cfg, const ProblemMetadata& meta) {
  if (cfg.regime) return *cfg.regime;
  if (cfg.measure == StopMeasure::grad) return Regime::nonconvex;
  const Regime r = default_regime(meta.convexity);
  if (r == Regime::nonconvex) throw ConfigError("gap-based stopping on a nonconvex problem needs an explicit regime");
  return r;
}

struct DirectionSetup {
  DirectionProvider provider;
  ConstantsOptions opts;
};

DirectionSetup direction_setup(const ExperimentConfig& cfg) {
  DirectionSetup s;
  if (cfg.linesearch.direction_mode == DirectionMode::general) {
    if (cfg.scaling_diag) {
      const Vec d = Eigen::Map<const Vec>(cfg.scaling_diag->data(), static_cast<Eigen::Index>(cfg.scaling_diag->size()));
      s.provider = scaled_newton_provider(d.asDiagonal().toDenseMatrix());
      s.opts.kappa1 = d.minCoeff();
      s.opts.kappa2 = d.maxCoeff();
      s.opts.beta = s.opts.kappa1 / s.opts.kappa2;
    } else {
      s.provider = steepest_provider();
    }
  }
  s.opts.nu = cfg.nu;
  return s;
}

double success_threshold(const LineSearchConfig& ls, double L, const ConstantsOptions& o) {
  const double kg = ls.accuracy.kappa_g, kf = ls.accuracy.kappa_f, th = ls.theta;
  if (ls.direction_mode == DirectionMode::general) return o.beta * (1 - th) / (kg + L * o.kappa2 / 2 + 2 * kf / o.kappa1);
  return (1 - th) / (kg + L / 2 + 2 * kf);
}

const char* trace_header =
    "k,outcome,alpha,delta,grad_batch,f0_batch,fs_batch,g_norm,f_exact,gradnorm_exact,i_k,j_k,phi,psi\n";

}  // namespace

void apply_overrides(ExperimentConfig& cfg, const Overrides& ov) {
  if (const char* env = std::getenv("STOCHLS_WORKERS")) {
    try {
      cfg.workers = std::stoi(env);
    } catch (const std::exception&) {
      throw ConfigError("STOCHLS_WORKERS must be an integer");
    }
  }
  if (ov.seeds) cfg.seeds = *ov.seeds;
  if (ov.output_dir) cfg.output_dir = *ov.output_dir;
  if (ov.workers) cfg.workers = *ov.workers;
  if (ov.exact_diagnostics) cfg.exact_diagnostics = *ov.exact_diagnostics;
}

LineSearchConfig resolve_linesearch(const ExperimentConfig& cfg, const ProblemMetadata& meta) {
  LineSearchConfig ls = cfg.linesearch;
  ls.sync();
  const DirectionSetup ds = direction_setup(cfg);
  if (cfg.p_g_at_threshold) {
    const ConstantsReport c = theoretical_constants(ls, meta, ds.opts);
    ls.accuracy.p_g = c.p_g_required;
  }
  if (cfg.p_f_at_threshold) {
    const ConstantsReport c = theoretical_constants(ls, meta, ds.opts);
    ls.accuracy.p_f = c.p_f_required;
  }
  ls.validate();
  return ls;
}

OptimizeResult run_optimize(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto problem = make_builtin(cfg.problem);
  const ProblemMetadata& meta = problem->metadata();
  const LineSearchConfig ls = resolve_linesearch(cfg, meta);
  const DirectionSetup ds = direction_setup(cfg);

  OptimizeResult res;
  res.regime = resolve_regime(cfg, meta);
  res.constants = theoretical_constants(ls, meta, ds.opts);
  const ConstantsReport& consts = res.constants;

  PotentialConfig pcfg;
  pcfg.nu = consts.nu;
  pcfg.L = meta.lipschitz_L;
  pcfg.theta = ls.theta;
  pcfg.eps = cfg.eps_ladder.back();
  pcfg.variant = res.regime;
  if (res.regime == Regime::nonconvex) {
    pcfg.f_ref = meta.f_min;
  } else {
    if (!meta.f_star) throw ConfigError("convex regimes need a problem with a known optimal value");
    pcfg.f_ref = *meta.f_star;
  }
  pcfg.validate();

  StoppingSpec stop;
  stop.max_iters = cfg.max_iters;
  if (cfg.measure == StopMeasure::grad) stop.eps_grad = cfg.eps_ladder;
  else stop.eps_gap = cfg.eps_ladder;

  const double a_bar = consts.A_bar;
  const double thresh = success_threshold(ls, meta.lipschitz_L, ds.opts);
  const double lb_factor = ls.accuracy.kappa_g * ls.alpha_max + 1;
  const bool write = !cfg.output_dir.empty();
  namespace fs = std::filesystem;
  if (write && cfg.write_traces) fs::create_directories(fs::path(cfg.output_dir) / "traces");

  res.seeds.resize(cfg.seeds.size());
  parallel_for(static_cast<int64_t>(cfg.seeds.size()), cfg.workers, [&](int64_t si) {
    const uint64_t seed = cfg.seeds[static_cast<size_t>(si)];
    RandomSource rng = RandomSource(seed).fork("run");
    RunOptions ro;
    ro.exact_diagnostics = cfg.exact_diagnostics;
    ro.provider = ds.provider;
    const Trace tr = run(*problem, ls, stop, rng, ro);
    SeedOutcome o;
    o.seed = seed;
    o.iterations = tr.summary.iterations;
    o.converged = tr.summary.converged;
    o.aborted = tr.summary.aborted;
    o.abort_reason = tr.summary.abort_reason;
    o.region_excursions = tr.summary.region_excursions;
    const auto& Ts = cfg.measure == StopMeasure::grad ? tr.summary.T_grad : tr.summary.T_gap;
    for (int64_t t : Ts) {
      o.T.push_back(t >= 0 ? t : o.iterations);
      o.censored.push_back(t < 0);
    }
    {
      const double f0 = tr.iterates.empty() ? exact_value(*problem, meta.x0) : tr.iterates[0].f;
      const double g0 = tr.iterates.empty() ? exact_gradient(*problem, meta.x0).norm() : tr.iterates[0].grad_norm;
      o.phi0 = phi_value(f0, g0, ls.alpha0, ls.delta0 * ls.delta0, pcfg);
    }
    int64_t i_count = 0, j_count = 0, capped = 0;
    std::string csv;
    if (write && cfg.write_traces) csv.reserve(tr.records.size() * 200 + 128), csv += trace_header;
    for (size_t k = 0; k < tr.records.size(); ++k) {
      const StepRecord& r = tr.records[k];
      capped += r.grad_capped ? 1 : 0;
      std::string f_s, gn_s, i_s, j_s, phi_s, psi_s;
      if (r.exact) {
        const StepDiagnostics& d = *r.exact;
        i_count += d.i_k ? 1 : 0;
        j_count += d.j_k ? 1 : 0;
        const double ph = phi_value(d.f_exact, d.gradnorm_exact, r.alpha, r.delta_sq, pcfg);
        const bool success = r.outcome != StepOutcome::unsuccessful;
        if (d.i_k && d.gradnorm_exact > lb_factor * r.g_norm * (1 + 1e-12)) o.lower_bound_violations += 1;
        if (d.i_k && d.j_k && r.alpha <= thresh && !success) o.success_violations += 1;
        if (ls.direction_mode == DirectionMode::steepest && d.j_k && success) {
          const double tol = 1e-12 * std::max(1.0, std::abs(d.f_exact));
          if (d.f_trial_exact > d.f_exact - ls.theta * r.alpha / 2 * r.g_norm * r.g_norm + tol)
            o.decrease_violations += 1;
        }
        double psi = NAN;
        if (res.regime == Regime::convex && ph > 0) psi = psi_convex(ph, pcfg.nu, pcfg.eps);
        if (res.regime == Regime::strongly_convex && ph > 0) psi = psi_strongly_convex(ph, pcfg.nu, pcfg.eps);
        if (res.regime != Regime::nonconvex && !(psi >= 0)) o.psi_negative += 1;
        if (write && cfg.write_traces) {
          f_s = format_real(d.f_exact);
          gn_s = format_real(d.gradnorm_exact);
          i_s = b01(d.i_k);
          j_s = b01(d.j_k);
          phi_s = format_real(ph);
          if (res.regime != Regime::nonconvex) psi_s = format_real(psi);
        }
      }
      if (write && cfg.write_traces) {
        csv += csv_line({std::to_string(r.k), to_string(r.outcome), format_real(r.alpha),
                         format_real(std::sqrt(r.delta_sq)), std::to_string(r.grad_batch),
                         std::to_string(r.f0_batch), std::to_string(r.fs_batch), format_real(r.g_norm), f_s, gn_s,
                         i_s, j_s, phi_s, psi_s});
      }
    }
    const double nrec = std::max<double>(1.0, static_cast<double>(tr.records.size()));
    o.i_rate = static_cast<double>(i_count) / nrec;
    o.j_rate = static_cast<double>(j_count) / nrec;
    o.grad_capped_rate = static_cast<double>(capped) / nrec;
    o.frac_alpha_ge_A_bar = fraction_alpha_at_least(tr.records, a_bar);
    o.running_min_improves = running_min_improves(tr.iterates);
    if (write && cfg.write_traces)
      write_text_file((fs::path(cfg.output_dir) / "traces" / fmt::format("seed_{}.csv", seed)).string(), csv);
    res.seeds[static_cast<size_t>(si)] = std::move(o);
  });

  // summary in config seed order, independent of scheduling
  std::string summary = "seed,eps,T_eps,censored\n";
  for (const auto& o : res.seeds) {
    for (size_t e = 0; e < cfg.eps_ladder.size(); ++e) {
      res.rows.push_back({o.seed, cfg.eps_ladder[e], o.T[e], static_cast<bool>(o.censored[e])});
      summary += csv_line({std::to_string(o.seed), format_real(cfg.eps_ladder[e]), std::to_string(o.T[e]),
                           b01(o.censored[e])});
    }
  }
  res.summary_csv = summary;
  res.fit = fit_rate(res.rows, res.regime);

  const double phi0 = res.seeds.empty() ? 0.0 : res.seeds.front().phi0;
  for (double eps : cfg.eps_ladder) {
    res.bounds.push_back(predicted_bound(res.regime, ls, meta, consts, phi0, eps));
    res.stated_bounds.push_back(res.regime == Regime::nonconvex ? nonconvex_stated_bound(ls, meta, phi0, eps) : NAN);
  }

  std::ostringstream rep;
  rep << "experiment: " << (cfg.name.empty() ? "(unnamed)" : cfg.name) << "\n";
  rep << "problem: " << to_string(cfg.problem.kind) << " n=" << cfg.problem.n << " N=" << cfg.problem.N
      << " class=" << to_string(meta.convexity) << " L=" << format_real(meta.lipschitz_L)
      << " V_g=" << format_real(meta.variance_bound_grad) << " V_f=" << format_real(meta.variance_bound_fun) << "\n";
  rep << "regime: " << to_string(res.regime) << "  measure: "
      << (cfg.measure == StopMeasure::grad ? "||grad f|| < eps" : "f - f* < eps") << "\n";
  if (res.regime == Regime::nonconvex)
    rep << "note: stopping uses the gradient norm (not its square); the fitted slope is compared with 2\n";
  rep << "\nconstants\n";
  rep << "  nu = " << format_real(consts.nu) << "  (required nu/(1-nu) >= " << format_real(consts.nu_ratio_required)
      << ")\n";
  rep << "  p_g = " << format_real(ls.accuracy.p_g) << "  required >= " << format_real(consts.p_g_required) << "\n";
  rep << "  p_f = " << format_real(ls.accuracy.p_f) << "  required >= " << format_real(consts.p_f_required) << "\n";
  rep << "  p_g p_f / sqrt(1 - p_f) = " << format_real(consts.product_actual)
      << "  required >= " << format_real(consts.product_required) << "\n";
  rep << "  A_bar = " << format_real(consts.A_bar) << "  (grid " << format_real(consts.A_bar_grid) << ")\n";
  rep << "  expected-decrease constant = " << format_real(consts.decrease_constant) << "\n";
  rep << "  phi0 = " << format_real(phi0) << "\n";
  for (const auto& w : consts.warnings) rep << "  warning: " << w << "\n";
  rep << "\nstopping times vs bounds\n";
  rep << "  eps, mean_T, used, censored, bound" << (res.regime == Regime::nonconvex ? ", stated_bound" : "") << "\n";
  for (size_t e = 0; e < cfg.eps_ladder.size(); ++e) {
    const LevelStats& l = res.fit->levels[e];
    rep << "  " << format_real(l.eps) << ", " << format_real(l.mean_T) << ", " << l.used << ", " << l.censored << ", "
        << (res.bounds[e].available ? format_real(res.bounds[e].bound) : "n/a (" + res.bounds[e].reason + ")");
    if (res.regime == Regime::nonconvex) rep << ", " << format_real(res.stated_bounds[e]);
    rep << "\n";
  }
  rep << "\nrate fit (" << to_string(res.regime) << ")\n";
  if (res.fit->refused) {
    rep << "  refused: " << res.fit->reason << "\n";
  } else {
    rep << "  slope = " << format_real(res.fit->slope) << "  intercept = " << format_real(res.fit->intercept)
        << "  r2 = " << format_real(res.fit->r_squared) << "\n";
  }
  for (const auto& w : res.fit->warnings) rep << "  warning: " << w << "\n";
  int64_t aborted = 0, excursions = 0, v41 = 0, v42 = 0, v43 = 0, psineg = 0, rm = 0;
  double frac_min = 1.0;
  for (const auto& o : res.seeds) {
    aborted += o.aborted ? 1 : 0;
    excursions += o.region_excursions;
    v41 += o.lower_bound_violations;
    v42 += o.success_violations;
    v43 += o.decrease_violations;
    psineg += o.psi_negative;
    rm += o.running_min_improves ? 1 : 0;
    frac_min = std::min(frac_min, o.frac_alpha_ge_A_bar);
  }
  rep << "\ntrace checks over " << res.seeds.size() << " seeds\n";
  rep << "  aborted runs: " << aborted << "\n";
  rep << "  region excursions: " << excursions << "\n";
  if (cfg.exact_diagnostics) {
    rep << "  gradient lower-bound violations: " << v41 << "\n";
    rep << "  success-threshold violations: " << v42 << "\n";
    rep << "  decrease violations: " << v43 << "\n";
    if (res.regime != Regime::nonconvex) rep << "  negative psi values: " << psineg << "\n";
    rep << "  seeds whose running-min gradient norm improves after the first 10%: " << rm << "\n";
    rep << "  min fraction of steps with alpha >= A_bar: " << format_real(frac_min) << "\n";
  } else {
    rep << "  exact diagnostics off\n";
  }
  res.report = rep.str();

  if (write) {
    const fs::path out(cfg.output_dir);
    write_text_file((out / "summary.csv").string(), res.summary_csv);
    std::string ps =
        "seed,iterations,converged,aborted,region_excursions,frac_alpha_ge_A_bar,running_min_improves,i_rate,j_rate,"
        "grad_capped_rate,lower_bound_violations,success_violations,decrease_violations,psi_negative\n";
    for (const auto& o : res.seeds)
      ps += csv_line({std::to_string(o.seed), std::to_string(o.iterations), b01(o.converged), b01(o.aborted),
                      std::to_string(o.region_excursions), format_real(o.frac_alpha_ge_A_bar),
                      b01(o.running_min_improves), format_real(o.i_rate), format_real(o.j_rate),
                      format_real(o.grad_capped_rate), std::to_string(o.lower_bound_violations),
                      std::to_string(o.success_violations), std::to_string(o.decrease_violations),
                      std::to_string(o.psi_negative)});
    write_text_file((out / "per_seed.csv").string(), ps);
    std::string rf = "eps,mean_T,used,censored,bound\n";
    for (size_t e = 0; e < cfg.eps_ladder.size(); ++e) {
      const LevelStats& l = res.fit->levels[e];
      rf += csv_line({format_real(l.eps), format_real(l.mean_T), std::to_string(l.used), std::to_string(l.censored),
                      res.bounds[e].available ? format_real(res.bounds[e].bound) : ""});
    }
    write_text_file((out / "rate_fit.csv").string(), rf);
    json info;
    info["schema_version"] = kSchemaVersion;
    info["mode"] = "optimize";
    info["regime"] = to_string(res.regime);
    info["eps_ladder"] = cfg.eps_ladder;
    std::vector<json> bj;
    for (const auto& b : res.bounds) bj.push_back(b.available ? json(b.bound) : json(nullptr));
    info["bounds"] = bj;
    write_text_file((out / "run_info.json").string(), info.dump(2) + "\n");
    write_text_file((out / "report.txt").string(), res.report);
  }
  return res;
}

RRResult run_rrprocess(const ExperimentConfig& cfg) {
  cfg.validate();
  RRResult res;
  const RandomSource master(cfg.rr_seed);
  std::string csv =
      "cell,p,lambda,A0,A_bar,alpha_max,h,Theta,Phi0,trials,max_steps,mean,ci_lo,ci_hi,bound,satisfied,censored,"
      "unreliable,dp_states,dp_mean,dp_agrees\n";
  std::ostringstream rep;
  rep << "renewal-reward grid: " << cfg.cells.size() << " cells\n";
  for (const auto& cell : cfg.cells) {
    RRCellResult r;
    r.name = cell.name;
    r.cfg = cell.cfg;
    r.estimate = estimate_expected_stop(cell.cfg, master.fork(cell.name).seed(), cfg.workers);
    r.dp_states = dp_state_count(cell.cfg, -cfg.dp_depth);
    if (r.dp_states > 0 && r.dp_states <= cfg.dp_max_states) {
      if (auto dp = expected_stop_dp(cell.cfg, -cfg.dp_depth, cfg.dp_max_states)) {
        r.dp_mean = dp->expected_T;
        const double half = (r.estimate.ci_hi - r.estimate.ci_lo) / 2;
        r.dp_agrees = std::abs(*r.dp_mean - r.estimate.mean) <= 3 * half + 1e-12 * std::max(1.0, r.estimate.mean);
      }
    }
    const char* hl = cell.cfg.h.kind == HKind::identity ? "identity" : cell.cfg.h.kind == HKind::constant ? "constant" : "table";
    csv += csv_line({r.name, format_real(r.cfg.p), format_real(r.cfg.lambda), format_real(r.cfg.A0),
                     format_real(r.cfg.A_bar()), format_real(r.cfg.alpha_max()), hl, format_real(r.cfg.Theta),
                     format_real(r.cfg.Phi0), std::to_string(r.cfg.trials), std::to_string(r.cfg.max_steps),
                     format_real(r.estimate.mean), format_real(r.estimate.ci_lo), format_real(r.estimate.ci_hi),
                     format_real(r.estimate.bound), b01(r.estimate.satisfied), std::to_string(r.estimate.censored),
                     b01(r.estimate.unreliable), std::to_string(r.dp_states),
                     r.dp_mean ? format_real(*r.dp_mean) : "", r.dp_mean ? b01(r.dp_agrees) : ""});
    rep << fmt::format("  {:<28} mean={:.4f} ci=[{:.4f}, {:.4f}] bound={:.4f} {}{}\n", r.name, r.estimate.mean,
                       r.estimate.ci_lo, r.estimate.ci_hi, r.estimate.bound,
                       r.estimate.satisfied ? "ok" : "VIOLATED", r.estimate.unreliable ? " (censoring > 1%)" : "");
    if (r.dp_mean)
      rep << fmt::format("  {:<28} exact={:.4f} {}\n", "", *r.dp_mean, r.dp_agrees ? "agrees" : "DISAGREES");
    res.cells.push_back(std::move(r));
  }
  res.csv = csv;
  res.report = rep.str();
  if (!cfg.output_dir.empty()) {
    namespace fs = std::filesystem;
    const fs::path out(cfg.output_dir);
    write_text_file((out / "rr_grid.csv").string(), res.csv);
    write_text_file((out / "report.txt").string(), res.report);
    json info;
    info["schema_version"] = kSchemaVersion;
    info["mode"] = "rrprocess";
    write_text_file((out / "run_info.json").string(), info.dump(2) + "\n");
  }
  return res;
}

std::string report_directory(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path d(dir);
  std::ifstream in(d / "run_info.json");
  if (!in) throw std::runtime_error("no run_info.json in " + dir);
  json info = json::parse(in);
  std::ostringstream rep;
  if (info.value("mode", "") == "rrprocess") {
    const CsvTable t = read_csv((d / "rr_grid.csv").string());
    const int c_cell = t.column("cell"), c_mean = t.column("mean"), c_hi = t.column("ci_hi"),
              c_bound = t.column("bound"), c_ok = t.column("satisfied");
    int ok = 0;
    for (const auto& r : t.rows) {
      rep << fmt::format("{:<28} mean={} ci_hi={} bound={} {}\n", r[c_cell], r[c_mean], r[c_hi], r[c_bound],
                         r[c_ok] == "1" ? "ok" : "VIOLATED");
      ok += r[c_ok] == "1";
    }
    rep << ok << "/" << t.rows.size() << " cells within the bound\n";
    return rep.str();
  }
  const Regime regime = parse_regime(info.at("regime").get<std::string>());
  const CsvTable t = read_csv((d / "summary.csv").string());
  const int cs = t.column("seed"), ce = t.column("eps"), ct = t.column("T_eps"), cc = t.column("censored");
  std::vector<SummaryRow> rows;
  for (const auto& r : t.rows)
    rows.push_back({std::stoull(r[cs]), std::stod(r[ce]), std::stoll(r[ct]), r[cc] == "1"});
  const RateFit fit = fit_rate(rows, regime);
  const auto bounds = info.value("bounds", std::vector<json>{});
  rep << "regime: " << to_string(regime) << "\n";
  rep << "eps, mean_T, used, censored, bound\n";
  for (size_t i = 0; i < fit.levels.size(); ++i) {
    const auto& l = fit.levels[i];
    rep << format_real(l.eps) << ", " << format_real(l.mean_T) << ", " << l.used << ", " << l.censored << ", "
        << (i < bounds.size() && bounds[i].is_number() ? format_real(bounds[i].get<double>()) : "n/a") << "\n";
  }
  if (fit.refused) rep << "fit refused: " << fit.reason << "\n";
  else
    rep << "slope = " << format_real(fit.slope) << "  intercept = " << format_real(fit.intercept)
        << "  r2 = " << format_real(fit.r_squared) << "\n";
  for (const auto& w : fit.warnings) rep << "warning: " << w << "\n";
  return rep.str();
}

std::string error_record(const std::string& dir, int exit_code, const std::string& kind, const std::string& message) {
  json e;
  e["exit_code"] = exit_code;
  e["kind"] = kind;
  e["message"] = message;
  const std::string text = e.dump(2) + "\n";
  if (!dir.empty()) {
    try {
      std::filesystem::create_directories(dir);
      write_text_file((std::filesystem::path(dir) / "error.json").string(), text);
    } catch (const std::exception&) {
    }
  }
  return text;
}

}  // namespace stochls
