#pragma once

/**
 * @file
 * @brief Seeded experiment orchestration: one cell per (solver, parameter,
 * horizon), CSV traces, a long-format summary, bound certificates and SVG
 * figures.
 *
 * Trace files hold exactly T rows; row t describes the iterate x^t reached
 * after t steps, with the step size and velocity norm of the step that
 * produced it.
 */

#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cgm/baselines.hpp"
#include "cgm/cgm_min.hpp"
#include "cgm/cgm_vi.hpp"
#include "cgm/error.hpp"
#include "cgm/harness/config.hpp"
#include "cgm/harness/csv.hpp"
#include "cgm/harness/svg_plot.hpp"
#include "cgm/metrics.hpp"
#include "cgm/problems.hpp"
#include "cgm/reference_solver.hpp"

namespace cgm::harness {

struct RunRecord {
  std::string label;
  std::string solver;  ///< cgm-min, cgm-vi, gda, eg
  std::filesystem::path csv;
  std::size_t horizon = 0;
  std::optional<ScheduleKind> schedule;
  std::optional<double> beta;
  std::vector<std::pair<std::string, double>> finals;
  std::optional<BoundsReport> bounds;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;
  std::filesystem::path summary_csv;
  std::filesystem::path bounds_csv;
  std::vector<std::filesystem::path> plots;
  std::vector<std::string> warnings;
  std::optional<RapReference> reference;

  bool all_bounds_pass() const {
    for (const auto& r : runs)
      if (r.bounds && !r.bounds->all_pass()) return false;
    return true;
  }
};

/// Worker count from CGM_WORKERS, else the hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("CGM_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs tasks[0..n) on up to `workers` threads; rethrows the first failure
/// (in task order) after all workers have finished.
template <typename Task>
void run_parallel(std::vector<Task>& tasks, unsigned workers) {
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        tasks[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::min<unsigned>(workers, static_cast<unsigned>(tasks.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < n; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace detail {

inline std::string beta_tag(double beta) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", beta);
  return buf;
}

template <typename Fn>
auto identify(const std::string& label, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), "run '" + label + "': " + e.detail(), e.iteration());
  }
}

inline CsvTable rap_trace_table(const MinTrace& trace, const MinProblem& problem,
                                const MinReference& ref) {
  CsvTable table({"iter", "eta", "f_resid", "abs_f_resid", "max_violation", "v_norm", "dist_x0",
                  "wall_ms"});
  for (std::size_t t = 1; t <= trace.size(); ++t) {
    const auto& prev = trace.steps[t - 1];
    const double resid = trace.f_at(t) - ref.f_star;
    table.add_numeric_row({static_cast<double>(t), prev.eta, resid, std::abs(resid),
                           std::max(0.0, trace.max_violation_at(t)), prev.v_norm,
                           (trace.point(t) - problem.x0).norm(), prev.wall_ms});
  }
  return table;
}

inline CsvTable vi_trace_table(const VITrace& trace, const VIProblem& problem, double beta) {
  CsvTable table({"iter", "eta", "gap", "ergodic_gap", "max_violation", "v_norm", "dist_x0",
                  "rel_err", "wall_ms"});
  const Vector& x_star = *problem.solution;
  Vector weighted = Vector::Zero(problem.dim());
  double total = 0.0;
  for (std::size_t t = 1; t <= trace.size(); ++t) {
    const auto& prev = trace.steps[t - 1];
    const double w = ergodic_weight(t - 1, trace.kappa);
    weighted += w * prev.x;
    total += w;
    const Vector& x = trace.point(t);
    table.add_numeric_row({static_cast<double>(t), prev.eta, hbg_gap_closed_form(x, beta),
                           hbg_gap_closed_form(weighted / total, beta),
                           std::max(0.0, trace.max_violation_at(t)), prev.v_norm,
                           (x - problem.x0).norm(), (x - x_star).norm() / x_star.norm(),
                           prev.wall_ms});
  }
  return table;
}

inline CsvTable baseline_table(const BaselineTrace& trace, double beta) {
  CsvTable table({"iter", "eta", "gap", "max_violation", "step_norm", "rel_err", "wall_ms"});
  for (const auto& it : trace.steps) {
    table.add_numeric_row({static_cast<double>(it.t), trace.eta, hbg_gap_closed_form(it.x, beta),
                           std::max(0.0, it.max_violation), it.step_norm, it.rel_err, it.wall_ms});
  }
  return table;
}

inline void add_bounds_rows(CsvTable& table, const RunRecord& run) {
  if (!run.bounds) return;
  for (const auto& c : run.bounds->certificates) {
    table.add_row({run.label, c.name, std::to_string(c.checked), std::to_string(c.worst_t),
                   format_number(c.worst_lhs), format_number(c.worst_rhs),
                   format_number(c.worst_slack), format_number(c.worst_margin),
                   c.pass ? "pass" : "FAIL"});
  }
}

}  // namespace detail

/// Loads (d, seed) from the cache or solves and stores it.
inline RapReference rap_reference(const RapData& data, Index d, std::uint64_t seed,
                                  const std::optional<std::filesystem::path>& cache_path,
                                  std::vector<std::string>* warnings = nullptr) {
  std::optional<ReferenceCache> cache;
  if (cache_path) {
    cache.emplace(*cache_path);
    if (auto hit = cache->find(d, seed, data); hit && hit->certificate.ok()) return *hit;
  }
  RapReference ref = solve_rap_reference(data);
  if (!ref.certificate.ok()) {
    if (warnings) {
      warnings->push_back("reference KKT residual " + format_number(ref.certificate.worst()) +
                          " exceeds 1e-8");
    }
  } else if (cache) {
    cache->store(d, seed, ref);
  }
  return ref;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult result;
  std::filesystem::create_directories(cfg.out_dir);
  std::vector<std::function<void()>> tasks;
  std::vector<RunRecord> runs;

  // Shared, read-only problem data for all cells.
  std::optional<MinProblem> rap;
  std::optional<MinReference> rap_ref;
  double f_unconstrained = 0.0;
  std::vector<VIProblem> games;

  if (cfg.problem == ProblemKind::Rap) {
    rap = rap_generate(cfg.d, cfg.seed);
    result.reference = rap_reference(*rap->rap, cfg.d, cfg.seed, cfg.cache_path(), &result.warnings);
    rap_ref = MinReference{result.reference->x, result.reference->f};
    f_unconstrained = rap_unconstrained_min(*rap->rap).f;
    for (ScheduleKind sched : cfg.schedules) {
      for (std::size_t T : cfg.horizons) {
        RunRecord r;
        r.solver = "cgm-min";
        r.schedule = sched;
        r.horizon = T;
        r.label = "rap_" + to_string(sched) + "_T" + std::to_string(T);
        r.csv = cfg.out_dir / (r.label + ".csv");
        runs.push_back(std::move(r));
      }
    }
  } else {
    for (double beta : cfg.betas) games.push_back(hbg_instantiate(cfg.d, beta, cfg.seed));
    for (std::size_t b = 0; b < cfg.betas.size(); ++b) {
      for (std::size_t T : cfg.horizons) {
        std::vector<std::string> solvers{"cgm-vi"};
        if (cfg.run_baselines) {
          solvers.push_back("gda");
          solvers.push_back("eg");
        }
        for (const auto& solver : solvers) {
          RunRecord r;
          r.solver = solver;
          r.beta = cfg.betas[b];
          r.horizon = T;
          r.label = "hbg_beta" + detail::beta_tag(cfg.betas[b]) + "_" +
                    (solver == "cgm-vi" ? std::string("cgm") : solver) + "_T" + std::to_string(T);
          r.csv = cfg.out_dir / (r.label + ".csv");
          runs.push_back(std::move(r));
        }
      }
    }
  }

  for (std::size_t i = 0; i < runs.size(); ++i) {
    tasks.emplace_back([&, i] {
      RunRecord& run = runs[i];
      detail::identify(run.label, [&] {
        if (run.solver == "cgm-min") {
          MinSolverConfig sc;
          sc.schedule = *run.schedule;
          sc.horizon = run.horizon;
          const MinTrace trace = cgm_min_run(*rap, sc, rap_ref);
          write_file_atomic(run.csv, detail::rap_trace_table(trace, *rap, *rap_ref).str());
          run.finals = {{"f_resid", *trace.final_f_resid},
                        {"max_violation", std::max(0.0, trace.final_max_violation)},
                        {"dist_to_xstar", (trace.final_x - rap_ref->x_star).norm()}};
          if (cfg.check_bounds) run.bounds = certify_min(trace, *rap, rap_ref, f_unconstrained);
        } else {
          std::size_t b = 0;
          while (cfg.betas[b] != *run.beta) ++b;
          const VIProblem& game = games[b];
          const double beta = *run.beta;
          if (run.solver == "cgm-vi") {
            VISolverConfig vc;
            vc.horizon = run.horizon;
            const VITrace trace = cgm_vi_run(game, vc);
            write_file_atomic(run.csv, detail::vi_trace_table(trace, game, beta).str());
            run.finals = {{"gap", hbg_gap_closed_form(trace.final_x, beta)},
                          {"ergodic_gap", hbg_gap_closed_form(trace.ergodic, beta)},
                          {"max_violation", std::max(0.0, trace.final_max_violation)},
                          {"rel_err", (trace.final_x - *game.solution).norm() /
                                          game.solution->norm()}};
            if (cfg.check_bounds) run.bounds = certify_vi(trace, game);
          } else {
            const double eta = run.solver == "gda" ? cfg.gda_eta : 1.0 / game.ell_F;
            const BaselineTrace trace = run.solver == "gda" ? gda_run(game, eta, run.horizon)
                                                            : eg_run(game, eta, run.horizon);
            write_file_atomic(run.csv, detail::baseline_table(trace, beta).str());
            run.finals = {{"gap", hbg_gap_closed_form(trace.final_x, beta)},
                          {"max_violation", std::max(0.0, trace.steps.back().max_violation)},
                          {"rel_err", trace.steps.back().rel_err}};
          }
        }
        return 0;
      });
    });
  }
  run_parallel(tasks, worker_count());

  // Summary in long format: run, key, value.
  CsvTable summary({"run", "key", "value"});
  if (result.reference) {
    summary.add_row({"reference", "f_star", format_number(result.reference->f)});
    summary.add_row({"reference", "kkt_residual", format_number(result.reference->certificate.worst())});
    summary.add_row({"reference", "f_unconstrained", format_number(f_unconstrained)});
  }
  for (const auto& run : runs) {
    for (const auto& [k, v] : run.finals) summary.add_row({run.label, k, format_number(v)});
    if (run.bounds) {
      for (const auto& [k, v] : run.bounds->constants)
        summary.add_row({run.label, "const." + k, format_number(v)});
      summary.add_row({run.label, "bounds_pass", run.bounds->all_pass() ? "1" : "0"});
    }
  }
  result.summary_csv = cfg.out_dir / "summary.csv";
  write_file_atomic(result.summary_csv, summary.str());

  if (cfg.check_bounds) {
    CsvTable bounds({"run", "certificate", "checked", "worst_t", "lhs", "rhs", "slack", "margin",
                     "status"});
    for (const auto& run : runs) detail::add_bounds_rows(bounds, run);
    result.bounds_csv = cfg.out_dir / "bounds.csv";
    write_file_atomic(result.bounds_csv, bounds.str());
  }

  if (cfg.plots) {
    auto plot = [&](const std::string& name, const std::vector<PlotInput>& inputs,
                    const std::vector<PanelSpec>& specs) {
      const auto path = cfg.out_dir / name;
      try {
        emit_plot(path, inputs, specs);
        result.plots.push_back(path);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptySeries) throw;
        result.warnings.push_back(name + ": " + e.what());
      }
    };
    auto label_T = [](const RunRecord& r) { return "T=" + std::to_string(r.horizon); };

    if (cfg.problem == ProblemKind::Rap) {
      for (ScheduleKind sched : cfg.schedules) {
        std::vector<PlotInput> inputs;
        for (const auto& r : runs)
          if (r.schedule == sched) inputs.push_back({label_T(r), r.csv});
        plot("fig_rap_" + to_string(sched) + ".svg", inputs,
             {{"absolute residual", "iter", "abs_f_resid"},
              {"constraint violation", "iter", "max_violation"}});
      }
      if (cfg.schedules.size() > 1) {
        for (std::size_t T : cfg.horizons) {
          std::vector<PlotInput> inputs;
          for (const auto& r : runs)
            if (r.horizon == T) inputs.push_back({to_string(*r.schedule), r.csv});
          plot("fig_rap_schedules_T" + std::to_string(T) + ".svg", inputs,
               {{"absolute residual", "iter", "abs_f_resid"},
                {"residual", "iter", "f_resid", false, false},
                {"constraint violation", "iter", "max_violation"}});
        }
      }
    } else {
      for (std::size_t T : cfg.horizons) {
        std::vector<PlotInput> inputs;
        for (const auto& r : runs)
          if (r.solver == "cgm-vi" && r.horizon == T)
            inputs.push_back({"beta=" + detail::beta_tag(*r.beta), r.csv});
        plot("fig_hbg_cgm_T" + std::to_string(T) + ".svg", inputs,
             {{"gap", "iter", "gap"},
              {"ergodic gap", "iter", "ergodic_gap"},
              {"constraint violation", "iter", "max_violation"}});
        if (!cfg.run_baselines) continue;
        for (double beta : cfg.betas) {
          std::vector<PlotInput> cmp;
          for (const auto& r : runs)
            if (r.beta == beta && r.horizon == T) cmp.push_back({r.solver, r.csv});
          plot("fig_hbg_beta" + detail::beta_tag(beta) + "_T" + std::to_string(T) +
                   "_baselines.svg",
               cmp,
               {{"relative error", "iter", "rel_err"},
                {"relative error vs time", "wall_ms", "rel_err"}});
        }
      }
    }
  }

  result.runs = std::move(runs);
  return result;
}

}  // namespace cgm::harness
