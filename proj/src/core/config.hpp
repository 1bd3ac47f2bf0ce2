#pragma once

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/linesearch.hpp"
#include "core/oracle.hpp"
#include "core/potential.hpp"
#include "core/rrprocess.hpp"

namespace stochls {

inline constexpr int kSchemaVersion = 1;

enum class Mode { optimize, rrprocess, lemma_suite };
enum class StopMeasure { grad, gap };

const char* to_string(Mode m);

struct RRCell {
  std::string name;
  RRProcessConfig cfg;
};

struct ExperimentConfig {
  Mode mode = Mode::optimize;
  std::string name;
  std::string output_dir;
  std::vector<uint64_t> seeds;
  int workers = 1;
  bool exact_diagnostics = true;
  bool write_traces = true;

  ProblemSpec problem;
  LineSearchConfig linesearch;
  std::optional<std::vector<double>> scaling_diag;
  bool p_g_at_threshold = false;
  bool p_f_at_threshold = false;

  std::optional<double> nu;  // empty: automatic
  std::optional<Regime> regime;  // empty: from the problem class and stopping measure
  StopMeasure measure = StopMeasure::grad;
  int64_t max_iters = 10000;
  std::vector<double> eps_ladder;

  std::vector<RRCell> cells;
  uint64_t rr_seed = 0;
  int64_t dp_depth = 8;
  int64_t dp_max_states = 20000000;

  int lemma_instances = 1000;
  uint64_t lemma_seed = 0;

  void validate() const;
};

// Throws ConfigError on any schema violation, including unknown keys.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// "0-19", "3,5,8" or a mix of both
std::vector<uint64_t> parse_seed_list(const std::string& s);

}  // namespace stochls
