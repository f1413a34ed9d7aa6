#pragma once

/**
 * @file
 * @brief Projection baselines for VIs over a product of simplices:
 * projected gradient descent-ascent and projected extragradient.
 */

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

#include "cgm/error.hpp"
#include "cgm/problems.hpp"
#include "cgm/types.hpp"

namespace cgm {

/// Euclidean projection onto {x >= 0, sum x = 1} by sorting and thresholding.
inline Vector project_simplex(const Vector& y) {
  const Index n = y.size();
  if (n == 0) throw Error(ErrorCode::ValidationError, "cannot project an empty vector");
  std::vector<double> sorted(y.data(), y.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (Index k = 0; k < n; ++k) {
    cumulative += sorted[static_cast<std::size_t>(k)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[static_cast<std::size_t>(k)] - candidate > 0.0) tau = candidate;
  }
  return (y.array() - tau).max(0.0).matrix();
}

/// Blockwise simplex projection for a product of simplices.
struct SimplexProjector {
  std::vector<Index> block_sizes;

  Vector operator()(const Vector& y) const {
    Vector out(y.size());
    Index offset = 0;
    for (const Index len : block_sizes) {
      out.segment(offset, len) = project_simplex(y.segment(offset, len));
      offset += len;
    }
    return out;
  }
};

inline SimplexProjector simplex_projector_for(const VIProblem& problem) {
  const Index total = std::accumulate(problem.simplex_blocks.begin(), problem.simplex_blocks.end(),
                                      Index{0});
  if (problem.simplex_blocks.empty() || total != problem.dim()) {
    throw Error(ErrorCode::UnsupportedConstraintSet,
                "baselines need a feasible set that is a product of simplices");
  }
  return SimplexProjector{problem.simplex_blocks};
}

struct BaselineIterate {
  std::size_t t = 0;  ///< iterate index after the step (1..T)
  Vector x;
  double rel_err = 0.0;
  double max_violation = 0.0;
  double step_norm = 0.0;  ///< ||x^t - x^{t-1}|| / eta
  double wall_ms = 0.0;
};

struct BaselineTrace {
  double eta = 0.0;
  double initial_rel_err = 0.0;
  std::vector<BaselineIterate> steps;
  Vector final_x;
};

namespace detail {

template <typename StepFn>
BaselineTrace run_projected(const VIProblem& problem, double eta, std::size_t horizon,
                            StepFn&& step) {
  const SimplexProjector project = simplex_projector_for(problem);
  if (!(eta > 0.0)) throw Error(ErrorCode::ValidationError, "eta must be positive");
  if (!problem.solution) {
    throw Error(ErrorCode::ReferenceMissing, "relative error needs a known solution");
  }
  const Vector& x_star = *problem.solution;
  const double x_star_norm = x_star.norm();

  BaselineTrace trace;
  trace.eta = eta;
  trace.initial_rel_err = (problem.x0 - x_star).norm() / x_star_norm;
  trace.steps.reserve(horizon);
  const auto start = std::chrono::steady_clock::now();
  Vector x = problem.x0;
  for (std::size_t t = 1; t <= horizon; ++t) {
    Vector next = step(x, project);
    BaselineIterate rec;
    rec.t = t;
    rec.step_norm = (next - x).norm() / eta;
    x = std::move(next);
    rec.x = x;
    rec.rel_err = (x - x_star).norm() / x_star_norm;
    rec.max_violation = max_constraint_value(problem.constraints, x);
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    trace.steps.push_back(rec);
  }
  trace.final_x = x;
  return trace;
}

}  // namespace detail

/// x^{t+1} = Proj_C(x^t - eta F(x^t)).
inline BaselineTrace gda_run(const VIProblem& problem, double eta, std::size_t horizon) {
  return detail::run_projected(problem, eta, horizon,
                               [&](const Vector& x, const SimplexProjector& project) {
                                 return project(x - eta * problem.op_F(x));
                               });
}

/// x^{t+1} = Proj_C(x^t - eta F(Proj_C(x^t - eta F(x^t)))).
inline BaselineTrace eg_run(const VIProblem& problem, double eta, std::size_t horizon) {
  return detail::run_projected(problem, eta, horizon,
                               [&](const Vector& x, const SimplexProjector& project) {
                                 const Vector half = project(x - eta * problem.op_F(x));
                                 return project(x - eta * problem.op_F(half));
                               });
}

inline constexpr double kGdaDefaultStep = 0.005;

}  // namespace cgm
