#include "core/config.hpp"



#include <fstream>
#include <set>
#include <sstream>

#include "core/errors.hpp"

namespace stochls {

using nlohmann::json;

const char* to_string(Mode m) {
  switch (m) {
    case Mode::optimize: return "optimize";
    case Mode::rrprocess: return "rrprocess";
    case Mode::lemma_suite: return "lemma_suite";
  }
  return "?";
}

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <class T>
T get(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <class T>
void maybe(const json& obj, const char* key, T& out, const std::string& where) {
  if (obj.contains(key)) out = get<T>(obj, key, where);
}

double real_or_threshold(const json& obj, const char* key, double fallback, bool& threshold,
                         const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (v.is_string()) {
    if (v.get<std::string>() != "threshold")
      throw ConfigError(where + "." + key + ": expected a number or \"threshold\"");
    threshold = true;
    return fallback;
  }
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return v.get<double>();
}

HSpec parse_h(const json& j, const std::string& where) {
  HSpec h;
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "identity") h.kind = HKind::identity;
    else if (s == "constant") h.kind = HKind::constant;
    else throw ConfigError(where + ": unknown h kind '" + s + "'");
    return h;
  }
  check_keys(j, {"kind", "scale", "value", "table"}, where);
  const auto kind = get<std::string>(j, "kind", where);
  if (kind == "identity") {
    h.kind = HKind::identity;
    maybe(j, "scale", h.scale, where);
  } else if (kind == "constant") {
    h.kind = HKind::constant;
    maybe(j, "value", h.value, where);
  } else if (kind == "table") {
    h.kind = HKind::table;
    const json& t = j.at("table");
    if (!t.is_object()) throw ConfigError(where + ".table: expected an object of level -> value");
    for (auto it = t.begin(); it != t.end(); ++it) {
      try {
        h.table[std::stoll(it.key())] = it.value().get<double>();
      } catch (const std::exception&) {
        throw ConfigError(where + ".table: bad entry '" + it.key() + "'");
      }
    }
  } else {
    throw ConfigError(where + ": unknown h kind '" + kind + "'");
  }
  return h;
}

std::string h_label(const HSpec& h) {
  switch (h.kind) {
    case HKind::identity: return "identity";
    case HKind::constant: return "constant";
    case HKind::table: return "table";
  }
  return "?";
}

void parse_rrprocess(const json& j, ExperimentConfig& c) {
  const std::string w = "rrprocess";
  check_keys(j, {"trials", "max_steps", "seed", "cells", "grid", "dp_depth", "dp_max_states"}, w);
  int64_t trials = 100000, max_steps = 1000000;
  maybe(j, "trials", trials, w);
  maybe(j, "max_steps", max_steps, w);
  maybe(j, "seed", c.rr_seed, w);
  maybe(j, "dp_depth", c.dp_depth, w);
  maybe(j, "dp_max_states", c.dp_max_states, w);
  if (j.contains("cells")) {
    const json& cells = j.at("cells");
    if (!cells.is_array()) throw ConfigError(w + ".cells: expected an array");
    int idx = 0;
    for (const json& cj : cells) {
      const std::string cw = w + ".cells[" + std::to_string(idx++) + "]";
      check_keys(cj, {"name", "p", "lambda", "A0", "j_max", "j_bar", "Theta", "h", "Phi0"}, cw);
      RRCell cell;
      cell.name = cj.value("name", "cell" + std::to_string(idx - 1));
      RRProcessConfig& r = cell.cfg;
      maybe(cj, "p", r.p, cw);
      maybe(cj, "lambda", r.lambda, cw);
      maybe(cj, "A0", r.A0, cw);
      maybe(cj, "j_max", r.j_max, cw);
      maybe(cj, "j_bar", r.j_bar, cw);
      maybe(cj, "Theta", r.Theta, cw);
      maybe(cj, "Phi0", r.Phi0, cw);
      if (cj.contains("h")) r.h = parse_h(cj.at("h"), cw + ".h");
      r.trials = trials;
      r.max_steps = max_steps;
      c.cells.push_back(cell);
    }
  }
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    const std::string gw = w + ".grid";
    check_keys(g, {"p", "lambda", "levels_below_A_bar", "h", "A_bar", "Theta", "Phi0"}, gw);
    const auto ps = get<std::vector<double>>(g, "p", gw);
    const auto below = get<std::vector<int64_t>>(g, "levels_below_A_bar", gw);
    double lambda = 0.6931471805599453, A_bar = 1.0, Theta = 1.0, Phi0 = 100.0;
    maybe(g, "lambda", lambda, gw);
    maybe(g, "A_bar", A_bar, gw);
    maybe(g, "Theta", Theta, gw);
    maybe(g, "Phi0", Phi0, gw);
    const json& hs = g.at("h");
    if (!hs.is_array()) throw ConfigError(gw + ".h: expected an array");
    for (double p : ps) {
      for (int64_t s : below) {
        if (s < 0) throw ConfigError(gw + ".levels_below_A_bar: entries must be >= 0");
        int hi = 0;
        for (const json& hj : hs) {
          RRCell cell;
          RRProcessConfig& r = cell.cfg;
          r.p = p;
          r.lambda = lambda;
          r.h = parse_h(hj, gw + ".h[" + std::to_string(hi++) + "]");
          r.j_bar = s;
          r.j_max = s;
          r.A0 = A_bar * std::exp(-lambda * static_cast<double>(s));
          // keep the grid exact when e^lambda is an integer
          const double base = std::round(std::exp(lambda));
          if (std::abs(std::exp(lambda) - base) <= 1e-14 * base) r.A0 = A_bar / std::pow(base, static_cast<double>(s));
          r.Theta = Theta;
          r.Phi0 = Phi0;
          r.trials = trials;
          r.max_steps = max_steps;
          std::ostringstream nm;
          nm << "p" << p << "_below" << s << "_" << h_label(r.h);
          cell.name = nm.str();
          c.cells.push_back(cell);
        }
      }
    }
  }
}

}  // namespace

std::vector<uint64_t> parse_seed_list(const std::string& s) {
  std::vector<uint64_t> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    const auto dash = part.find('-');
    try {
      if (dash == std::string::npos) {
        out.push_back(std::stoull(part));
      } else {
        const uint64_t a = std::stoull(part.substr(0, dash));
        const uint64_t b = std::stoull(part.substr(dash + 1));
        if (b < a) throw ConfigError("seed range '" + part + "' is decreasing");
        for (uint64_t v = a; v <= b; ++v) out.push_back(v);
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("bad seed list '" + s + "'");
    }
  }
  return out;
}

ExperimentConfig parse_config(const json& j) {
  const std::string w = "config";
  check_keys(j,
             {"schema_version", "name", "mode", "output_dir", "seeds", "workers", "exact_diagnostics",
              "write_traces", "problem", "linesearch", "accuracy", "potential", "stopping", "eps_ladder",
              "rrprocess", "lemmas"},
             w);
  if (!j.contains("schema_version")) throw ConfigError("config: schema_version is required");
  if (get<int>(j, "schema_version", w) != kSchemaVersion)
    throw ConfigError("config: unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");

  ExperimentConfig c;
  maybe(j, "name", c.name, w);
  const std::string mode = j.value("mode", "optimize");
  if (mode == "optimize") c.mode = Mode::optimize;
  else if (mode == "rrprocess") c.mode = Mode::rrprocess;
  else if (mode == "lemma_suite") c.mode = Mode::lemma_suite;
  else throw ConfigError("config.mode: unknown mode '" + mode + "'");
  maybe(j, "output_dir", c.output_dir, w);
  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    if (s.is_array()) {
      for (const json& v : s) {
        if (!v.is_number_unsigned()) throw ConfigError("config.seeds: entries must be nonnegative integers");
        c.seeds.push_back(v.get<uint64_t>());
      }
    } else if (s.is_string()) {
      c.seeds = parse_seed_list(s.get<std::string>());
    } else {
      throw ConfigError("config.seeds: expected an array or a range string");
    }
  }
  maybe(j, "workers", c.workers, w);
  maybe(j, "exact_diagnostics", c.exact_diagnostics, w);
  maybe(j, "write_traces", c.write_traces, w);

  if (j.contains("problem")) {
    const json& p = j.at("problem");
    const std::string pw = "problem";
    check_keys(p, {"kind", "n", "N", "seed", "noise", "mu", "L", "reg", "margin", "label_noise", "wall_radius",
                   "grad_noise_var", "fun_noise_var", "region_radius"},
               pw);
    c.problem.kind = parse_problem_kind(get<std::string>(p, "kind", pw));
    maybe(p, "n", c.problem.n, pw);
    maybe(p, "N", c.problem.N, pw);
    maybe(p, "seed", c.problem.seed, pw);
    maybe(p, "noise", c.problem.noise, pw);
    maybe(p, "mu", c.problem.mu, pw);
    maybe(p, "L", c.problem.L, pw);
    maybe(p, "reg", c.problem.reg, pw);
    maybe(p, "margin", c.problem.margin, pw);
    maybe(p, "label_noise", c.problem.label_noise, pw);
    maybe(p, "wall_radius", c.problem.wall_radius, pw);
    maybe(p, "grad_noise_var", c.problem.grad_noise_var, pw);
    maybe(p, "fun_noise_var", c.problem.fun_noise_var, pw);
    maybe(p, "region_radius", c.problem.region_radius, pw);
  } else if (c.mode == Mode::optimize) {
    throw ConfigError("config: optimize mode needs a problem block");
  }

  LineSearchConfig& ls = c.linesearch;
  if (j.contains("linesearch")) {
    const json& l = j.at("linesearch");
    const std::string lw = "linesearch";
    check_keys(l, {"gamma", "theta", "alpha_max", "alpha0", "delta0", "delta_max", "direction_mode", "scaling_diag"},
               lw);
    maybe(l, "gamma", ls.gamma, lw);
    maybe(l, "theta", ls.theta, lw);
    maybe(l, "alpha_max", ls.alpha_max, lw);
    ls.alpha0 = ls.alpha_max;
    maybe(l, "alpha0", ls.alpha0, lw);
    maybe(l, "delta0", ls.delta0, lw);
    maybe(l, "delta_max", ls.delta_max, lw);
    const std::string dm = l.value("direction_mode", "steepest");
    if (dm == "steepest") ls.direction_mode = DirectionMode::steepest;
    else if (dm == "general") ls.direction_mode = DirectionMode::general;
    else throw ConfigError("linesearch.direction_mode: unknown value '" + dm + "'");
    if (l.contains("scaling_diag")) c.scaling_diag = get<std::vector<double>>(l, "scaling_diag", lw);
  }
  if (j.contains("accuracy")) {
    const json& a = j.at("accuracy");
    const std::string aw = "accuracy";
    check_keys(a, {"kappa_g", "kappa_f", "kappa_f_bar", "p_g", "p_f", "max_batch", "guess_growth"}, aw);
    AccuracyConfig& acc = ls.accuracy;
    maybe(a, "kappa_g", acc.kappa_g, aw);
    maybe(a, "kappa_f", acc.kappa_f, aw);
    maybe(a, "kappa_f_bar", acc.kappa_f_bar, aw);
    acc.p_g = real_or_threshold(a, "p_g", acc.p_g, c.p_g_at_threshold, aw);
    acc.p_f = real_or_threshold(a, "p_f", acc.p_f, c.p_f_at_threshold, aw);
    maybe(a, "max_batch", acc.max_batch, aw);
    maybe(a, "guess_growth", acc.guess_growth, aw);
  }
  ls.sync();

  if (j.contains("potential")) {
    const json& p = j.at("potential");
    const std::string pw = "potential";
    check_keys(p, {"nu", "regime"}, pw);
    if (p.contains("nu")) {
      const json& v = p.at("nu");
      if (v.is_string()) {
        if (v.get<std::string>() != "auto") throw ConfigError("potential.nu: expected a number or \"auto\"");
      } else {
        c.nu = get<double>(p, "nu", pw);
      }
    }
    if (p.contains("regime")) {
      const auto r = get<std::string>(p, "regime", pw);
      if (r != "auto") c.regime = parse_regime(r);
    }
  }
  if (j.contains("stopping")) {
    const json& s = j.at("stopping");
    const std::string sw = "stopping";
    check_keys(s, {"measure", "max_iters"}, sw);
    const std::string m = s.value("measure", "grad");
    if (m == "grad") c.measure = StopMeasure::grad;
    else if (m == "gap") c.measure = StopMeasure::gap;
    else throw ConfigError("stopping.measure: expected \"grad\" or \"gap\"");
    maybe(s, "max_iters", c.max_iters, sw);
  }
  if (j.contains("eps_ladder")) c.eps_ladder = get<std::vector<double>>(j, "eps_ladder", w);
  if (j.contains("rrprocess")) parse_rrprocess(j.at("rrprocess"), c);
  if (j.contains("lemmas")) {
    const json& l = j.at("lemmas");
    check_keys(l, {"instances", "seed"}, "lemmas");
    maybe(l, "instances", c.lemma_instances, "lemmas");
    maybe(l, "seed", c.lemma_seed, "lemmas");
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (workers < 1) throw ConfigError("config.workers must be >= 1");
  switch (mode) {
    case Mode::optimize: {
      if (seeds.empty()) throw ConfigError("config.seeds must not be empty");
      if (eps_ladder.size() < 3) throw ConfigError("config.eps_ladder needs at least 3 levels");
      for (size_t i = 0; i < eps_ladder.size(); ++i) {
        if (!(eps_ladder[i] > 0)) throw ConfigError("config.eps_ladder entries must be > 0");
        if (i > 0 && !(eps_ladder[i] < eps_ladder[i - 1]))
          throw ConfigError("config.eps_ladder must be strictly decreasing");
      }
      if (max_iters < 1) throw ConfigError("stopping.max_iters must be >= 1");
      if (nu && !(*nu > 0 && *nu < 1)) throw ConfigError("potential.nu must lie in (0, 1)");
      if (scaling_diag) {
        if (static_cast<int64_t>(scaling_diag->size()) != problem.n)
          throw ConfigError("linesearch.scaling_diag must have n entries");
        for (double v : *scaling_diag)
          if (!(v > 0)) throw ConfigError("linesearch.scaling_diag entries must be > 0");
      }
      linesearch.validate();
      break;
    }
    case Mode::rrprocess: {
      if (cells.empty()) throw ConfigError("rrprocess: no cells configured");
      for (const auto& cell : cells) cell.cfg.validate();
      break;
    }
    case Mode::lemma_suite: {
      if (lemma_instances < 1) throw ConfigError("lemmas.instances must be >= 1");
      break;
    }
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace stochls
