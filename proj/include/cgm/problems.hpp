#pragma once

/**
 * @file
 * @brief Constrained problem abstractions and the two benchmark families:
 * the resource allocation problem (strongly convex QP with a quadratic risk
 * constraint) and the high-dimensional bilinear game (strongly monotone VI
 * over a product of simplices).
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "cgm/error.hpp"
#include "cgm/qp_projection.hpp"
#include "cgm/rng.hpp"
#include "cgm/types.hpp"

namespace cgm {

/// Convex constraint g(x) <= 0 with value/gradient oracles.
/// `smoothness` is the Lipschitz constant of the gradient (0 for affine g).
struct SmoothConstraint {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  double smoothness = 0.0;
  std::string name;
};

using ConstraintList = std::vector<SmoothConstraint>;

struct RapData {
  Matrix Sigma;
  Vector a;
  Vector r;
  Matrix E;
  double Rmax = 0.0;
  double Emax = 0.0;

  Index dim() const { return a.size(); }
  double objective(const Vector& x) const { return 0.5 * x.dot(Sigma * x) + a.dot(x); }
  Vector gradient(const Vector& x) const { return Sigma * x + a; }
};

struct MinProblem {
  std::function<double(const Vector&)> value_f;
  std::function<Vector(const Vector&)> grad_f;
  double mu = 0.0;
  double ell_f = 0.0;
  ConstraintList constraints;
  Vector x0;
  std::shared_ptr<const RapData> rap;  ///< set for resource-allocation instances

  Index dim() const { return x0.size(); }
  double kappa() const { return ell_f / mu; }
  double ell_g() const {
    double out = 0.0;
    for (const auto& c : constraints) out = std::max(out, c.smoothness);
    return out;
  }
};

struct VIProblem {
  std::function<Vector(const Vector&)> op_F;
  double mu = 0.0;
  double ell_F = 0.0;
  double B = 0.0;
  ConstraintList constraints;
  Vector x0;
  double diameter_D = 0.0;

  /// Sizes of consecutive simplex blocks when the feasible set is a product
  /// of unit simplices; empty otherwise.
  std::vector<Index> simplex_blocks;
  /// Known solution, when available analytically.
  std::optional<Vector> solution;
  /// Game parameter for bilinear-game instances.
  std::optional<double> hbg_beta;
  /// Number of times the start point was redrawn.
  std::size_t start_redraws = 0;

  Index dim() const { return x0.size(); }
  double kappa() const { return ell_F / mu; }
  double ell_g() const {
    double out = 0.0;
    for (const auto& c : constraints) out = std::max(out, c.smoothness);
    return out;
  }
};

struct ViolatedConstraint {
  std::size_t index;
  double value;
};

/// Indices (0-based, ascending) with g_i(x) strictly positive.
inline std::vector<ViolatedConstraint> violated_set(const ConstraintList& constraints,
                                                    const Vector& x) {
  std::vector<ViolatedConstraint> out;
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    const double g = constraints[i].value(x);
    if (g > 0.0) out.push_back({i, g});
  }
  return out;
}

/// Rows grad g_i(x) . v <= -alpha g_i(x) for every violated i.
inline VelocityPolytope build_polytope(const ConstraintList& constraints, const Vector& x,
                                       double alpha) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::ValidationError, "alpha must be positive");
  VelocityPolytope polytope(x.size());
  for (const auto& [index, g] : violated_set(constraints, x)) {
    polytope.add_row(constraints[index].gradient(x), -alpha * g, index);
  }
  return polytope;
}

/// Start points built by normalisation may miss feasibility by a few ulps.
inline constexpr double kStartFeasibilityTol = 1e-12;

inline double max_constraint_value(const ConstraintList& constraints, const Vector& x) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& c : constraints) worst = std::max(worst, c.value(x));
  return worst;
}

// ---------------------------------------------------------------------------
// Constraint builders
// ---------------------------------------------------------------------------

namespace constraints {

/// -x_i <= 0
inline SmoothConstraint nonnegative(Index i, Index n) {
  return {[i](const Vector& x) { return -x[i]; },
          [i, n](const Vector&) {
            Vector g = Vector::Zero(n);
            g[i] = -1.0;
            return g;
          },
          0.0, "nonneg[" + std::to_string(i) + "]"};
}

/// sign * (sum_{j in [begin, begin+len)} x_j - 1) <= 0
inline SmoothConstraint block_sum(Index begin, Index len, Index n, double sign, std::string name) {
  return {[=](const Vector& x) { return sign * (x.segment(begin, len).sum() - 1.0); },
          [=](const Vector&) {
            Vector g = Vector::Zero(n);
            g.segment(begin, len).setConstant(sign);
            return g;
          },
          0.0, std::move(name)};
}

/// w . x - bound <= 0
inline SmoothConstraint linear(Vector w, double bound, std::string name) {
  auto weights = std::make_shared<const Vector>(std::move(w));
  return {[weights, bound](const Vector& x) { return weights->dot(x) - bound; },
          [weights](const Vector&) { return Vector(*weights); }, 0.0, std::move(name)};
}

/// x^T Q x - bound <= 0 with Q symmetric PSD; smoothness 2 lambda_max(Q).
inline SmoothConstraint quadratic(std::shared_ptr<const Matrix> Q, double bound,
                                  double smoothness, std::string name) {
  return {[Q, bound](const Vector& x) { return x.dot(*Q * x) - bound; },
          [Q](const Vector& x) { return Vector(2.0 * (*Q * x)); }, smoothness, std::move(name)};
}

/// ||x - center||^2 - radius_sq <= 0
inline SmoothConstraint ball(Vector center, double radius_sq, std::string name) {
  auto c = std::make_shared<const Vector>(std::move(center));
  return {[c, radius_sq](const Vector& x) { return (x - *c).squaredNorm() - radius_sq; },
          [c](const Vector& x) { return Vector(2.0 * (x - *c)); }, 2.0, std::move(name)};
}

}  // namespace constraints

// ---------------------------------------------------------------------------
// Resource allocation problem
// ---------------------------------------------------------------------------

namespace detail {

inline std::pair<double, double> extreme_eigenvalues(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularMatrix, "symmetric eigensolve failed");
  }
  return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
}

}  // namespace detail

/// Wraps RapData as a MinProblem: g_1..g_d = -x_i, then the sum equality as
/// two inequalities, the budget row and the quadratic risk row.
inline MinProblem rap_problem(std::shared_ptr<const RapData> data) {
  const Index d = data->dim();
  MinProblem p;
  p.rap = data;
  p.value_f = [data](const Vector& x) { return data->objective(x); };
  p.grad_f = [data](const Vector& x) { return data->gradient(x); };
  std::tie(p.mu, p.ell_f) = detail::extreme_eigenvalues(data->Sigma);
  const double lambda_max_E = detail::extreme_eigenvalues(data->E).second;

  p.constraints.reserve(static_cast<std::size_t>(d) + 4);
  for (Index i = 0; i < d; ++i) p.constraints.push_back(constraints::nonnegative(i, d));
  p.constraints.push_back(constraints::block_sum(0, d, d, 1.0, "sum<=1"));
  p.constraints.push_back(constraints::block_sum(0, d, d, -1.0, "sum>=1"));
  p.constraints.push_back(constraints::linear(data->r, data->Rmax, "budget"));
  p.constraints.push_back(constraints::quadratic(std::make_shared<const Matrix>(data->E),
                                                 data->Emax, 2.0 * lambda_max_E, "risk"));
  p.x0 = Vector::Constant(d, 1.0 / static_cast<double>(d));
  return p;
}

/// Seeded RAP instance of dimension d (d >= 2).
inline MinProblem rap_generate(Index d, std::uint64_t seed) {
  if (d < 2) throw Error(ErrorCode::ValidationError, "rap requires d >= 2");
  static constexpr Index kRank = 10;

  auto gaussian = [d](SplitMix64 rng) {
    Matrix G(d, kRank);
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < kRank; ++j) G(i, j) = rng.normal();
    return G;
  };

  auto data = std::make_shared<RapData>();
  const Matrix G1 = gaussian(SplitMix64::substream(seed, 0));
  const Matrix G2 = gaussian(SplitMix64::substream(seed, 1));
  data->Sigma = G1 * G1.transpose() + 5.0 * Matrix::Identity(d, d);
  data->E = G2 * G2.transpose() + 10.0 * Matrix::Identity(d, d);

  const double sigma_bar = data->Sigma.diagonal().array().sqrt().mean();
  SplitMix64 u_rng = SplitMix64::substream(seed, 2);
  data->a.resize(d);
  for (Index i = 0; i < d; ++i) data->a[i] = sigma_bar * u_rng.uniform();

  SplitMix64 r_rng = SplitMix64::substream(seed, 3);
  data->r.resize(d);
  for (Index i = 0; i < d; ++i) data->r[i] = std::abs(r_rng.normal()) + 0.1;

  data->Rmax = data->r.mean();
  data->Emax = data->E.sum() / static_cast<double>(d * d);
  return rap_problem(std::move(data));
}

struct UnconstrainedMin {
  Vector x;
  double f = 0.0;
};

/// argmin over R^n of 1/2 x^T Sigma x + a^T x.
inline UnconstrainedMin rap_unconstrained_min(const RapData& data) {
  Eigen::LLT<Matrix> llt(data.Sigma);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularMatrix, "Sigma is not positive definite");
  }
  UnconstrainedMin out;
  out.x = -llt.solve(data.a);
  out.f = 0.5 * data.a.dot(out.x);
  return out;
}

// ---------------------------------------------------------------------------
// High-dimensional bilinear game
// ---------------------------------------------------------------------------

/// F(x) = M x with M = [[2b I, (1-b) I], [-(1-b) I, 2b I]].
inline Vector hbg_operator(const Vector& x, double beta) {
  const Index d = x.size() / 2;
  Vector out(x.size());
  out.head(d) = 2.0 * beta * x.head(d) + (1.0 - beta) * x.tail(d);
  out.tail(d) = -(1.0 - beta) * x.head(d) + 2.0 * beta * x.tail(d);
  return out;
}

inline double hbg_lipschitz(double beta) { return std::sqrt(5.0 * beta * beta - 2.0 * beta + 1.0); }

/// Bilinear game VI on the product of two d-simplices.
/// The start point is a normalised uniform draw; a draw whose block sum
/// underflows (or that makes F(x0) vanish) is replaced from the next substream.
inline VIProblem hbg_instantiate(Index d, double beta, std::uint64_t seed) {
  if (d < 1) throw Error(ErrorCode::ValidationError, "hbg requires d >= 1");
  if (!(beta > 0.0 && beta < 1.0)) {
    throw Error(ErrorCode::ValidationError, "beta must lie in (0, 1)");
  }
  const Index n = 2 * d;
  VIProblem p;
  p.op_F = [beta](const Vector& x) { return hbg_operator(x, beta); };
  p.mu = 2.0 * beta;
  p.ell_F = hbg_lipschitz(beta);
  p.B = 0.0;
  p.diameter_D = 2.0;
  p.hbg_beta = beta;
  p.simplex_blocks = {d, d};

  p.constraints.reserve(static_cast<std::size_t>(n) + 4);
  for (Index i = 0; i < n; ++i) p.constraints.push_back(constraints::nonnegative(i, n));
  p.constraints.push_back(constraints::block_sum(0, d, n, 1.0, "sum1<=1"));
  p.constraints.push_back(constraints::block_sum(0, d, n, -1.0, "sum1>=1"));
  p.constraints.push_back(constraints::block_sum(d, d, n, 1.0, "sum2<=1"));
  p.constraints.push_back(constraints::block_sum(d, d, n, -1.0, "sum2>=1"));

  for (std::uint64_t stream = 0;; ++stream) {
    SplitMix64 rng = SplitMix64::substream(seed, 100 + stream);
    Vector x(n);
    for (Index i = 0; i < n; ++i) x[i] = rng.uniform();
    const double s1 = x.head(d).sum();
    const double s2 = x.tail(d).sum();
    if (s1 >= 1e-12 && s2 >= 1e-12) {
      x.head(d) /= s1;
      x.tail(d) /= s2;
      if (hbg_operator(x, beta).squaredNorm() + p.B > 0.0) {
        p.x0 = std::move(x);
        p.start_redraws = stream;
        break;
      }
    }
    if (stream > 1000) throw Error(ErrorCode::DegenerateStart, "could not draw a start point");
  }
  p.solution = Vector::Constant(n, 1.0 / static_cast<double>(d));
  return p;
}

}  // namespace cgm
