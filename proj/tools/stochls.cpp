// stochls command-line front end; talks to the library through the C interface only.
#include <cstdio>
#include <cstdlib>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "stochls/stochls.h"

namespace {

int exit_code(stochls_status s) {
  switch (s) {
    case STOCHLS_OK: return 0;
    case STOCHLS_CONFIG:
    case STOCHLS_INVALID_ARGUMENT: return 2;
    default: return 3;
  }
}

int finish(stochls_status s, char* report) {
  if (report) {
    std::fputs(report, stdout);
    stochls_string_free(report);
  }
  if (s != STOCHLS_OK) std::fprintf(stderr, "stochls: %s\n", stochls_last_error());
  return exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic line search with adaptive sampling"};
  app.require_subcommand(1);

  std::string seeds, out, diag;
  int workers = 0;
  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--seeds", seeds, "seed list, e.g. 0-19 or 1,4,9");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--exact-diagnostics", diag, "on or off")->check(CLI::IsMember({"on", "off"}));
  };

  std::string run_config;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", run_config, "config file")->required();
  add_run_flags(run);

  std::string rr_config;
  auto* rr = app.add_subcommand("rrprocess", "simulate a renewal-reward grid");
  rr->add_option("config", rr_config, "config file")->required();
  add_run_flags(rr);

  int instances = 1000;
  uint64_t lemma_seed = 0;
  auto* lemmas = app.add_subcommand("lemmas", "run the lemma property suite");
  lemmas->add_option("--instances", instances, "instances per check")->check(CLI::PositiveNumber);
  lemmas->add_option("--seed", lemma_seed, "master seed");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "summarise a finished run directory");
  report->add_option("dir", report_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  nlohmann::json ov = nlohmann::json::object();
  if (!seeds.empty()) ov["seeds"] = seeds;
  if (!out.empty()) ov["output_dir"] = out;
  if (workers > 0) ov["workers"] = workers;
  if (!diag.empty()) ov["exact_diagnostics"] = diag == "on";
  const std::string ov_text = ov.dump();

  char* text = nullptr;
  stochls_status s = STOCHLS_OK;
  if (*run || *rr) {
    s = stochls_run_config_file((*run ? run_config : rr_config).c_str(), ov_text.c_str(), &text);
    return finish(s, text);
  }
  if (*lemmas) {
    int ok = 0;
    s = stochls_lemma_suite(instances, lemma_seed, &text, &ok);
    const int code = finish(s, text);
    return code != 0 ? code : (ok ? 0 : 3);
  }
  s = stochls_report_directory(report_dir.c_str(), &text);
  return finish(s, text);
}
