// cgm_bench: run a resource-allocation or bilinear-game experiment and write
// CSV traces, a summary and SVG figures.
//
// Exit status: 0 on success, 1 when --check-bounds is set and a certificate
// fails, 2 on any error.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cgm/harness/config.hpp"
#include "cgm/harness/experiment.hpp"

namespace h = cgm::harness;

int main(int argc, char** argv) {
  CLI::App app{"Constrained gradient method benchmark"};
  std::string config_path;
  std::string problem, d, beta, seed, iters, schedule, out, gda_eta, cache;
  bool baselines = false, check_bounds = false, no_plots = false;

  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--problem", problem, "rap | hbg");
  app.add_option("--d", d, "dimension");
  app.add_option("--beta", beta, "game parameter(s), comma separated");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--iters", iters, "horizon(s) T, comma separated");
  app.add_option("--schedule", schedule, "constant | varying | constant,varying");
  app.add_flag("--baselines", baselines, "also run GDA and EG (hbg)");
  app.add_flag("--check-bounds", check_bounds, "certify the convergence bounds");
  app.add_option("--out", out, "output directory");
  app.add_flag("--no-plots", no_plots, "skip SVG output");
  app.add_option("--gda-eta", gda_eta, "GDA step size");
  app.add_option("--reference-cache", cache, "reference solution cache file");
  CLI11_PARSE(app, argc, argv);

  try {
    h::ConfigEntries entries;
    if (!config_path.empty()) entries = h::parse_config_file(config_path);
    h::ConfigEntries flags;
    auto set = [&](const char* key, const std::string& v) {
      if (!v.empty()) flags[key] = h::ConfigValue{v, 0};
    };
    set("problem", problem);
    set("d", d);
    set("beta", beta);
    set("seed", seed);
    set("iters", iters);
    set("schedule", schedule);
    set("out", out);
    set("gda_eta", gda_eta);
    set("reference_cache", cache);
    if (baselines) set("baselines", "true");
    if (check_bounds) set("check_bounds", "true");
    if (no_plots) set("plots", "false");

    const h::ExperimentConfig cfg = h::build_config(h::merge_entries(entries, flags));
    const h::ExperimentResult result = h::run_experiment(cfg);

    if (result.reference) {
      std::printf("reference f* = %.17g (KKT residual %.3g)\n", result.reference->f,
                  result.reference->certificate.worst());
    }
    for (const auto& run : result.runs) {
      std::printf("%-32s", run.label.c_str());
      for (const auto& [k, v] : run.finals) std::printf("  %s=%.6g", k.c_str(), v);
      if (run.bounds) std::printf("  bounds=%s", run.bounds->all_pass() ? "pass" : "FAIL");
      std::printf("\n");
      if (run.bounds) {
        for (const auto& c : run.bounds->certificates) {
          if (!c.pass) {
            std::printf("    %s failed at t=%zu: %.6g > %.6g\n", c.name.c_str(), c.worst_t,
                        c.worst_lhs, c.worst_rhs);
          }
        }
      }
    }
    for (const auto& w : result.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::printf("wrote %zu traces, summary %s\n", result.runs.size(),
                result.summary_csv.string().c_str());
    if (cfg.check_bounds && !result.all_bounds_pass()) return 1;
    return 0;
  } catch (const cgm::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
