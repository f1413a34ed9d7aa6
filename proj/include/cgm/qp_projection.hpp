#pragma once

/**
 * @file
 * @brief Least-distance projection onto a velocity polytope.
 *
 * Solves  min_v ||v + c||^2  s.t.  a_i . v <= b_i  for a small set of rows
 * with a dual active-set method (Goldfarb-Idnani specialised to an identity
 * Hessian). Also provides an exhaustive active-set enumeration used as a
 * test oracle, and a KKT residual evaluator.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "cgm/error.hpp"
#include "cgm/types.hpp"

namespace cgm {

/// Norms below this are treated as zero when validating rows.
inline constexpr double kDegenerateNormal = 1e-14;
inline constexpr double kDefaultQpTol = 1e-10;

/// Halfspace `normal . v <= rhs`.
struct HalfspaceRow {
  Vector normal;
  double rhs = 0.0;

  bool is_degenerate() const { return normal.norm() < kDegenerateNormal; }
};

/**
 * @brief Intersection of halfspaces in R^dim. No rows means the whole space.
 *
 * `add_row` drops vacuous rows (zero normal, rhs >= 0) and rejects
 * infeasibility witnesses (zero normal, rhs < 0) with ErrorCode::Infeasible.
 * `source` remembers which caller-side index produced each stored row.
 */
class VelocityPolytope {
 public:
  explicit VelocityPolytope(Index dim) : dim_(dim) {
    if (dim <= 0) throw Error(ErrorCode::ValidationError, "polytope dimension must be positive");
  }

  void add_row(Vector normal, double rhs, std::size_t source = kNoSource) {
    if (normal.size() != dim_) {
      throw Error(ErrorCode::ValidationError, "row dimension does not match polytope dimension");
    }
    if (!normal.allFinite() || !std::isfinite(rhs)) {
      throw Error(ErrorCode::ValidationError, "row has non-finite entries");
    }
    if (normal.norm() < kDegenerateNormal) {
      if (rhs < 0.0) {
        throw Error(ErrorCode::Infeasible,
                    "zero normal with negative right-hand side (constraint qualification fails)");
      }
      ++dropped_;
      return;
    }
    rows_.push_back(HalfspaceRow{std::move(normal), rhs});
    sources_.push_back(source == kNoSource ? rows_.size() - 1 : source);
  }

  Index dim() const { return dim_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const std::vector<HalfspaceRow>& rows() const { return rows_; }
  const HalfspaceRow& row(std::size_t i) const { return rows_[i]; }
  std::size_t source(std::size_t i) const { return sources_[i]; }
  std::size_t dropped() const { return dropped_; }

  /// Largest `normal . v - rhs` over rows (negative infinity when empty).
  double max_violation(const Vector& v) const {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& r : rows_) worst = std::max(worst, r.normal.dot(v) - r.rhs);
    return worst;
  }

  static constexpr std::size_t kNoSource = static_cast<std::size_t>(-1);

 private:
  Index dim_;
  std::vector<HalfspaceRow> rows_;
  std::vector<std::size_t> sources_;
  std::size_t dropped_ = 0;
};

struct ProjectionResult {
  Vector v;
  Vector dual;  ///< one nonnegative multiplier per polytope row
  double kkt_residual = 0.0;
  std::size_t iterations = 0;
  std::vector<std::size_t> active;  ///< rows in the final active set
};

/// max(stationarity norm, largest positive row violation, largest |lambda_i * slack_i|).
inline double kkt_residual_qp(const ProjectionResult& result, const Vector& target,
                              const VelocityPolytope& polytope) {
  if (static_cast<std::size_t>(result.dual.size()) != polytope.size()) {
    throw Error(ErrorCode::ValidationError, "dual length does not match row count");
  }
  Vector stationarity = result.v + target;
  double primal = 0.0;
  double complementarity = 0.0;
  for (std::size_t i = 0; i < polytope.size(); ++i) {
    const auto& row = polytope.row(i);
    const double lambda = result.dual[static_cast<Index>(i)];
    const double slack = row.normal.dot(result.v) - row.rhs;
    stationarity += lambda * row.normal;
    primal = std::max(primal, slack);
    complementarity = std::max(complementarity, std::abs(lambda * slack));
  }
  return std::max({stationarity.norm(), primal, complementarity});
}

namespace detail {

inline Matrix gather_normals(const VelocityPolytope& polytope,
                             const std::vector<std::size_t>& rows) {
  Matrix normals(polytope.dim(), static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    normals.col(static_cast<Index>(k)) = polytope.row(rows[k]).normal;
  }
  return normals;
}

/// Least-squares coefficients of `rhs` in the span of the columns of N.
inline Vector span_coefficients(const Matrix& normals, const Vector& rhs) {
  return normals.completeOrthogonalDecomposition().solve(rhs);
}

/// Multipliers and point for a fixed equality-active set:
/// v = y - N lambda with N^T v = b_S. Uses pseudo-inverses, so dependent
/// rows give the minimum-norm lambda.
inline std::pair<Vector, Vector> equality_kkt(const Vector& y, const VelocityPolytope& polytope,
                                              const std::vector<std::size_t>& rows) {
  if (rows.empty()) return {y, Vector()};
  const Matrix normals = gather_normals(polytope, rows);
  Vector rhs(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    rhs[static_cast<Index>(k)] = polytope.row(rows[k]).rhs;
  }
  const auto rows_cod = Matrix(normals.transpose()).completeOrthogonalDecomposition();
  const auto cols_cod = normals.completeOrthogonalDecomposition();
  Vector lambda = cols_cod.solve(y - rows_cod.solve(rhs));
  Vector v = y - normals * lambda;
  // Two rounds of refinement on the active rows, then refit lambda.
  for (int k = 0; k < 2; ++k) v -= rows_cod.solve(normals.transpose() * v - rhs);
  lambda = cols_cod.solve(y - v);
  return {v, lambda};
}

inline double row_scale(const VelocityPolytope& polytope, const Vector& target) {
  double scale = 1.0 + target.norm();
  for (const auto& r : polytope.rows()) scale = std::max(scale, std::abs(r.rhs));
  return scale;
}

}  // namespace detail

/**
 * @brief Euclidean projection of -c onto the polytope.
 *
 * Dual active-set iteration: start from the unconstrained minimiser and
 * repeatedly add the most violated row, taking partial dual steps (and
 * dropping rows whose multiplier hits zero) until the row becomes active.
 * The final active set is re-solved directly to polish v and the multipliers.
 *
 * Throws ErrorCode::Infeasible when a violated row cannot be satisfied
 * (dual ray), ErrorCode::MaxIterations after 50 (rows + 1) basis changes.
 */
inline ProjectionResult project_velocity(const Vector& target, const VelocityPolytope& polytope,
                                         double tol = kDefaultQpTol) {
  if (!(tol > 0.0)) throw Error(ErrorCode::ValidationError, "tol must be positive");
  if (target.size() != polytope.dim()) {
    throw Error(ErrorCode::ValidationError, "target dimension does not match polytope");
  }
  if (!target.allFinite()) throw Error(ErrorCode::ValidationError, "target has non-finite entries");

  const std::size_t m = polytope.size();
  const Vector y = -target;
  ProjectionResult result;
  result.dual = Vector::Zero(static_cast<Index>(m));

  if (m == 0 || polytope.max_violation(y) <= tol) {
    result.v = y;
    result.kkt_residual = kkt_residual_qp(result, target, polytope);
    return result;
  }

  const std::size_t max_iterations = 50 * (m + 1);
  std::vector<std::size_t> active;
  std::vector<double> lambda;  // parallel to `active`
  std::vector<bool> in_active(m, false);
  Vector v = y;

  while (true) {
    // Most violated row not yet in the active set.
    std::size_t p = m;
    double worst = tol;
    for (std::size_t i = 0; i < m; ++i) {
      if (in_active[i]) continue;
      const double s = polytope.row(i).normal.dot(v) - polytope.row(i).rhs;
      if (s > worst) {
        worst = s;
        p = i;
      }
    }
    if (p == m) break;

    const Vector& ap = polytope.row(p).normal;
    const double bp = polytope.row(p).rhs;
    double lambda_p = 0.0;

    while (true) {
      if (++result.iterations > max_iterations) {
        throw Error(ErrorCode::MaxIterations, "dual active-set solver did not converge");
      }
      Vector r;
      Vector z = ap;
      if (!active.empty()) {
        const Matrix normals = detail::gather_normals(polytope, active);
        r = detail::span_coefficients(normals, ap);
        z -= normals * r;
      }

      // Largest dual step before an active multiplier reaches zero.
      double t_partial = std::numeric_limits<double>::infinity();
      std::size_t blocking = active.size();
      for (std::size_t k = 0; k < active.size(); ++k) {
        const double rk = r[static_cast<Index>(k)];
        if (rk > 1e-14) {
          const double ratio = lambda[k] / rk;
          if (ratio < t_partial) {
            t_partial = ratio;
            blocking = k;
          }
        }
      }

      const double z_sq = z.squaredNorm();
      const bool independent = z_sq > 1e-20 * ap.squaredNorm();
      const double violation = ap.dot(v) - bp;
      const double t_full =
          independent ? violation / z_sq : std::numeric_limits<double>::infinity();

      if (!std::isfinite(t_partial) && !std::isfinite(t_full)) {
        throw Error(ErrorCode::Infeasible, "velocity polytope is empty");
      }

      const double step = std::min(t_partial, t_full);
      if (independent) v -= step * z;
      for (std::size_t k = 0; k < active.size(); ++k) lambda[k] -= step * r[static_cast<Index>(k)];
      lambda_p += step;

      if (t_full <= t_partial) {
        active.push_back(p);
        lambda.push_back(lambda_p);
        in_active[p] = true;
        break;
      }
      in_active[active[blocking]] = false;
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(blocking));
      lambda.erase(lambda.begin() + static_cast<std::ptrdiff_t>(blocking));
    }
  }

  // Polish: re-solve the equality system on the final active set.
  ProjectionResult polished;
  polished.dual = Vector::Zero(static_cast<Index>(m));
  {
    auto [v_eq, lambda_eq] = detail::equality_kkt(y, polytope, active);
    polished.v = std::move(v_eq);
    for (std::size_t k = 0; k < active.size(); ++k) {
      polished.dual[static_cast<Index>(active[k])] = std::max(0.0, lambda_eq[static_cast<Index>(k)]);
    }
  }
  result.v = v;
  for (std::size_t k = 0; k < active.size(); ++k) {
    result.dual[static_cast<Index>(active[k])] = std::max(0.0, lambda[k]);
  }
  result.active = active;
  result.kkt_residual = kkt_residual_qp(result, target, polytope);
  polished.kkt_residual = kkt_residual_qp(polished, target, polytope);
  if (polished.kkt_residual <= result.kkt_residual) {
    result.v = std::move(polished.v);
    result.dual = std::move(polished.dual);
    result.kkt_residual = polished.kkt_residual;
  }
  return result;
}

/**
 * @brief Exhaustive oracle for project_velocity.
 *
 * Tries every subset of rows as the equality-active set, keeps candidates
 * that are feasible with nonnegative multipliers, and returns the one with
 * the smallest objective (lexicographically smallest subset on ties).
 * Exponential in the row count; meant for tests with at most ~12 rows.
 */
inline Vector brute_force_projection(const Vector& target, const VelocityPolytope& polytope) {
  const std::size_t m = polytope.size();
  if (m > 20) throw Error(ErrorCode::ValidationError, "too many rows for exhaustive enumeration");
  const Vector y = -target;
  const double scale = detail::row_scale(polytope, target);
  const double feas_tol = 1e-9 * scale;
  const double tie_tol = 1e-12 * scale * scale;

  bool found = false;
  double best_obj = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_rows;
  Vector best;

  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < m; ++i) {
      if (mask & (std::size_t{1} << i)) rows.push_back(i);
    }
    auto [v, lambda] = detail::equality_kkt(y, polytope, rows);
    if (!v.allFinite()) continue;
    if (lambda.size() > 0 && lambda.minCoeff() < -feas_tol) continue;
    if (m > 0 && polytope.max_violation(v) > feas_tol) continue;
    const double obj = (v - y).squaredNorm();
    const bool better = obj < best_obj - tie_tol;
    const bool tie_smaller = std::abs(obj - best_obj) <= tie_tol &&
                             std::lexicographical_compare(rows.begin(), rows.end(),
                                                          best_rows.begin(), best_rows.end());
    if (!found || better || tie_smaller) {
      found = true;
      best_obj = obj;
      best_rows = rows;
      best = v;
    }
  }
  if (!found) throw Error(ErrorCode::Infeasible, "no active subset yields a feasible point");
  return best;
}

}  // namespace cgm
