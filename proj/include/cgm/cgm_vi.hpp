#pragma once

/**
 * @file
 * @brief Constrained gradient method for strongly monotone variational
 * inequalities.
 *
 * Same velocity projection as the minimisation solver with F(x) in place of
 * the gradient, alpha = mu, eta_t = 1 / (mu (t + 16 kappa^2)), and an extra
 * ball constraint around x^0 that keeps the iterates bounded.
 */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cgm/error.hpp"
#include "cgm/problems.hpp"
#include "cgm/qp_projection.hpp"
#include "cgm/types.hpp"

namespace cgm {

/// Tightest admissible Delta: max{1, D^2 ell_F^2 / (||F(x0)||^2 + B)}.
inline double delta_default(double normFx0_sq, double B, double D, double ell_F) {
  const double denom = normFx0_sq + B;
  if (!(denom > 0.0)) {
    throw Error(ErrorCode::DegenerateStart, "||F(x0)||^2 + B = 0; choose another start point");
  }
  return std::max(1.0, D * D * ell_F * ell_F / denom);
}

/// eta_t = 1 / (mu (t + 16 kappa^2)).
inline double step_vi(std::size_t t, double mu, double kappa) {
  return 1.0 / (mu * (static_cast<double>(t) + 16.0 * kappa * kappa));
}

/// Ergodic weight of iterate t: t + 16 kappa^2 - 1.
inline double ergodic_weight(std::size_t t, double kappa) {
  return static_cast<double>(t) + 16.0 * kappa * kappa - 1.0;
}

struct VISolverConfig {
  std::optional<double> delta;  ///< defaults to delta_default
  std::size_t horizon = 1000;
  double qp_tol = kDefaultQpTol;
};

/// Ball constraint ||x - x0||^2 <= (Delta / ell_F^2)(||F(x0)||^2 + B).
struct AuxConstraint {
  Vector center;
  double radius_sq = 0.0;

  double value(const Vector& x) const { return (x - center).squaredNorm() - radius_sq; }
  SmoothConstraint as_constraint() const { return constraints::ball(center, radius_sq, "aux-ball"); }
};

struct VIIterate {
  std::size_t t = 0;
  Vector x;
  Vector v;
  double eta = 0.0;
  double max_violation = 0.0;  ///< over the m original constraints and the ball
  double dist_x0 = 0.0;
  double v_norm = 0.0;
  std::size_t violated = 0;
  std::size_t qp_iterations = 0;
  double wall_ms = 0.0;
};

struct VITrace {
  double kappa = 0.0;
  double delta = 0.0;
  double normFx0_sq = 0.0;
  AuxConstraint aux;
  std::vector<VIIterate> steps;  ///< t = 0 .. T-1
  Vector final_x;                ///< x^T
  double final_max_violation = 0.0;
  Vector ergodic;                ///< weighted average of x^0 .. x^{T-1}

  std::size_t size() const { return steps.size(); }
  const Vector& point(std::size_t t) const { return t < steps.size() ? steps[t].x : final_x; }
  double max_violation_at(std::size_t t) const {
    return t < steps.size() ? steps[t].max_violation : final_max_violation;
  }
};

/// Weighted average of points[0..T-1] with weights t + 16 kappa^2 - 1.
inline Vector ergodic_average(std::span<const Vector> points, double kappa) {
  if (points.empty()) throw Error(ErrorCode::ValidationError, "ergodic average of no iterates");
  Vector sum = Vector::Zero(points.front().size());
  double total = 0.0;
  for (std::size_t t = 0; t < points.size(); ++t) {
    const double w = ergodic_weight(t, kappa);
    sum += w * points[t];
    total += w;
  }
  return sum / total;
}

inline Vector ergodic_average(const VITrace& trace, std::size_t T) {
  if (T < 1 || T > trace.size()) {
    throw Error(ErrorCode::ValidationError, "trace holds fewer than T iterates");
  }
  std::vector<Vector> points;
  points.reserve(T);
  for (std::size_t t = 0; t < T; ++t) points.push_back(trace.steps[t].x);
  return ergodic_average(points, trace.kappa);
}

/// Returns the resolved Delta; rejects Delta below the admissible value.
inline double validate(const VISolverConfig& config, const VIProblem& problem) {
  if (!(problem.mu > 0.0) || problem.ell_F < problem.mu || problem.B < 0.0 ||
      !(problem.diameter_D > 0.0)) {
    throw Error(ErrorCode::ValidationError, "problem requires 0 < mu <= ell_F, B >= 0, D > 0");
  }
  if (config.horizon < 1) throw Error(ErrorCode::ScheduleInvalid, "horizon must be at least 1");
  if (!(config.qp_tol > 0.0)) throw Error(ErrorCode::ValidationError, "qp_tol must be positive");
  const double normF0 = problem.op_F(problem.x0).squaredNorm();
  const double floor = delta_default(normF0, problem.B, problem.diameter_D, problem.ell_F);
  const double delta = config.delta.value_or(floor);
  if (delta < floor) {
    throw Error(ErrorCode::ValidationError,
                "delta below the admissible value " + std::to_string(floor));
  }
  return delta;
}

inline AuxConstraint make_aux_constraint(const VIProblem& problem, double delta) {
  const double normF0 = problem.op_F(problem.x0).squaredNorm();
  return AuxConstraint{problem.x0,
                       delta / (problem.ell_F * problem.ell_F) * (normF0 + problem.B)};
}

/// Constraint list g_1..g_m followed by the auxiliary ball as g_{m+1}.
inline ConstraintList augmented_constraints(const VIProblem& problem, const AuxConstraint& aux) {
  ConstraintList out = problem.constraints;
  out.push_back(aux.as_constraint());
  return out;
}

inline VITrace cgm_vi_run(const VIProblem& problem, const VISolverConfig& config) {
  const double delta = validate(config, problem);
  if (max_constraint_value(problem.constraints, problem.x0) > kStartFeasibilityTol) {
    throw Error(ErrorCode::ValidationError, "x0 must be feasible");
  }
  VITrace trace;
  trace.kappa = problem.kappa();
  trace.delta = delta;
  trace.normFx0_sq = problem.op_F(problem.x0).squaredNorm();
  trace.aux = make_aux_constraint(problem, delta);
  const ConstraintList all = augmented_constraints(problem, trace.aux);
  const double alpha = problem.mu;

  trace.steps.reserve(config.horizon);
  Vector weighted = Vector::Zero(problem.dim());
  double total_weight = 0.0;

  const auto start = std::chrono::steady_clock::now();
  Vector x = problem.x0;
  for (std::size_t t = 0; t < config.horizon; ++t) {
    VIIterate rec;
    rec.t = t;
    rec.x = x;
    rec.eta = step_vi(t, problem.mu, trace.kappa);
    rec.max_violation = max_constraint_value(all, x);
    rec.dist_x0 = (x - problem.x0).norm();

    const double w = ergodic_weight(t, trace.kappa);
    weighted += w * x;
    total_weight += w;

    const Vector F = problem.op_F(x);
    try {
      const VelocityPolytope polytope = build_polytope(all, x, alpha);
      rec.violated = polytope.size() + polytope.dropped();
      if (polytope.empty()) {
        rec.v = -F;
      } else {
        ProjectionResult proj = project_velocity(F, polytope, config.qp_tol);
        rec.v = std::move(proj.v);
        rec.qp_iterations = proj.iterations;
      }
    } catch (const Error& e) {
      throw e.at_iteration(t);
    }
    rec.v_norm = rec.v.norm();
    x = x + rec.eta * rec.v;
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    trace.steps.push_back(std::move(rec));
  }
  trace.final_x = x;
  trace.final_max_violation = max_constraint_value(all, x);
  trace.ergodic = weighted / total_weight;
  return trace;
}

}  // namespace cgm
