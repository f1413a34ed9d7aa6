#pragma once

/**
 * @file
 * @brief Constrained gradient method for strongly convex minimisation.
 *
 * Each iteration projects -grad f(x) onto the velocity polytope of the
 * currently violated constraints and moves along the projected velocity:
 *   v^t = argmin_{v in V_alpha(x^t)} ||v + grad f(x^t)||^2,  x^{t+1} = x^t + eta_t v^t.
 */

#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cgm/error.hpp"
#include "cgm/problems.hpp"
#include "cgm/qp_projection.hpp"
#include "cgm/types.hpp"

namespace cgm {

enum class ScheduleKind { Constant, Varying };

inline std::string to_string(ScheduleKind kind) {
  return kind == ScheduleKind::Constant ? "constant" : "varying";
}

/// eta = log T / (mu T).
inline double step_constant(std::size_t horizon, double mu) {
  if (horizon < 1) throw Error(ErrorCode::ScheduleInvalid, "horizon must be at least 1");
  const double T = static_cast<double>(horizon);
  return std::log(T) / (mu * T);
}

/// eta_t = 1 / (mu (t + kappa)).
inline double step_varying(std::size_t t, double mu, double kappa) {
  return 1.0 / (mu * (static_cast<double>(t) + kappa));
}

struct MinSolverConfig {
  std::optional<double> alpha;  ///< defaults to mu
  ScheduleKind schedule = ScheduleKind::Constant;
  std::size_t horizon = 1000;
  double qp_tol = kDefaultQpTol;
};

/// Throws ScheduleInvalid / ValidationError for inadmissible settings and
/// returns the resolved alpha.
inline double validate(const MinSolverConfig& config, const MinProblem& problem) {
  if (!(problem.mu > 0.0) || problem.ell_f < problem.mu) {
    throw Error(ErrorCode::ValidationError, "problem requires 0 < mu <= ell_f");
  }
  const double alpha = config.alpha.value_or(problem.mu);
  if (!(alpha > 0.0 && alpha <= problem.mu)) {
    throw Error(ErrorCode::ValidationError, "alpha must lie in (0, mu]");
  }
  if (config.horizon < 1) throw Error(ErrorCode::ScheduleInvalid, "horizon must be at least 1");
  if (!(config.qp_tol > 0.0)) throw Error(ErrorCode::ValidationError, "qp_tol must be positive");
  if (config.schedule == ScheduleKind::Constant) {
    const double T = static_cast<double>(config.horizon);
    if (config.horizon < 2) {
      throw Error(ErrorCode::ScheduleInvalid, "constant schedule with T = 1 gives a zero step");
    }
    if (T < problem.kappa() * std::log(T)) {
      throw Error(ErrorCode::ScheduleInvalid,
                  "constant schedule requires T >= kappa log T (kappa = " +
                      std::to_string(problem.kappa()) + ", T = " + std::to_string(config.horizon) +
                      ")");
    }
  }
  return alpha;
}

struct MinStep {
  Vector x_next;
  Vector v;
  std::size_t violated = 0;
  std::size_t qp_iterations = 0;
  double qp_kkt = 0.0;
};

/// One iteration from x. With no violated constraint the velocity is exactly
/// -grad f(x) and no QP is solved.
inline MinStep cgm_min_step(const MinProblem& problem, const Vector& x, double alpha, double eta,
                            double qp_tol = kDefaultQpTol) {
  const double eta_max = std::min(1.0 / problem.ell_f, 1.0 / alpha);
  if (!(eta > 0.0) || eta > eta_max * (1.0 + 1e-12)) {
    throw Error(ErrorCode::ValidationError, "step size outside (0, min{1/ell_f, 1/alpha}]");
  }
  const Vector grad = problem.grad_f(x);
  const VelocityPolytope polytope = build_polytope(problem.constraints, x, alpha);
  MinStep out;
  out.violated = polytope.size() + polytope.dropped();
  if (polytope.empty()) {
    out.v = -grad;
  } else {
    ProjectionResult proj = project_velocity(grad, polytope, qp_tol);
    out.v = std::move(proj.v);
    out.qp_iterations = proj.iterations;
    out.qp_kkt = proj.kkt_residual;
  }
  out.x_next = x + eta * out.v;
  return out;
}

struct MinReference {
  Vector x_star;
  double f_star = 0.0;
};

/// Record for iteration t: the point x^t, the velocity v^t computed there and
/// the step eta_t used to leave it.
struct MinIterate {
  std::size_t t = 0;
  Vector x;
  Vector v;
  double eta = 0.0;
  double f_value = 0.0;
  std::optional<double> f_resid;
  double max_violation = 0.0;  ///< max_i g_i(x^t), may be negative
  double v_norm = 0.0;
  std::size_t violated = 0;
  std::size_t qp_iterations = 0;
  double wall_ms = 0.0;  ///< cumulative time at the end of the step
};

struct MinTrace {
  double alpha = 0.0;
  ScheduleKind schedule = ScheduleKind::Constant;
  std::size_t horizon = 0;
  std::vector<MinIterate> steps;  ///< t = 0 .. T-1
  Vector final_x;                 ///< x^T
  double final_f = 0.0;
  double final_max_violation = 0.0;
  std::optional<double> final_f_resid;
  std::optional<MinReference> reference;

  std::size_t size() const { return steps.size(); }
  const Vector& point(std::size_t t) const { return t < steps.size() ? steps[t].x : final_x; }
  double f_at(std::size_t t) const { return t < steps.size() ? steps[t].f_value : final_f; }
  double max_violation_at(std::size_t t) const {
    return t < steps.size() ? steps[t].max_violation : final_max_violation;
  }
};

/// Fills the residual columns once a reference solution is known.
inline void attach_reference(MinTrace& trace, const MinReference& reference) {
  trace.reference = reference;
  for (auto& it : trace.steps) it.f_resid = it.f_value - reference.f_star;
  trace.final_f_resid = trace.final_f - reference.f_star;
}

/// First `t` steps of a trace, with x^t as the final point.
inline MinTrace truncate(const MinTrace& trace, std::size_t t) {
  if (t > trace.size()) throw Error(ErrorCode::ValidationError, "cannot truncate beyond the trace");
  MinTrace out = trace;
  out.steps.resize(t);
  if (t < trace.size()) {
    out.final_x = trace.steps[t].x;
    out.final_f = trace.steps[t].f_value;
    out.final_max_violation = trace.steps[t].max_violation;
    out.final_f_resid = trace.steps[t].f_resid;
  }
  return out;
}

/// Runs T iterations from problem.x0. QP failures are rethrown tagged with
/// the failing iteration.
inline MinTrace cgm_min_run(const MinProblem& problem, const MinSolverConfig& config,
                            const std::optional<MinReference>& reference = {}) {
  const double alpha = validate(config, problem);
  if (max_constraint_value(problem.constraints, problem.x0) > kStartFeasibilityTol) {
    throw Error(ErrorCode::ValidationError, "x0 must be feasible");
  }
  const double eta_const = config.schedule == ScheduleKind::Constant
                               ? step_constant(config.horizon, problem.mu)
                               : 0.0;

  MinTrace trace;
  trace.alpha = alpha;
  trace.schedule = config.schedule;
  trace.horizon = config.horizon;
  trace.steps.reserve(config.horizon);

  const auto start = std::chrono::steady_clock::now();
  Vector x = problem.x0;
  for (std::size_t t = 0; t < config.horizon; ++t) {
    const double eta = config.schedule == ScheduleKind::Constant
                           ? eta_const
                           : step_varying(t, problem.mu, problem.kappa());
    MinIterate rec;
    rec.t = t;
    rec.x = x;
    rec.eta = eta;
    rec.f_value = problem.value_f(x);
    rec.max_violation = max_constraint_value(problem.constraints, x);
    MinStep step;
    try {
      step = cgm_min_step(problem, x, alpha, eta, config.qp_tol);
    } catch (const Error& e) {
      throw e.at_iteration(t);
    }
    rec.v = step.v;
    rec.v_norm = step.v.norm();
    rec.violated = step.violated;
    rec.qp_iterations = step.qp_iterations;
    x = std::move(step.x_next);
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    trace.steps.push_back(std::move(rec));
  }
  trace.final_x = x;
  trace.final_f = problem.value_f(x);
  trace.final_max_violation = max_constraint_value(problem.constraints, x);
  if (reference) attach_reference(trace, *reference);
  return trace;
}

}  // namespace cgm
