#pragma once

/**
 * @file
 * @brief High-accuracy reference solution for resource allocation instances.
 *
 * Log-barrier interior point on
 *   min 1/2 x^T Sigma x + a^T x
 *   s.t. x >= 0, 1^T x = 1, r^T x <= Rmax, x^T E x <= Emax.
 * The equality is kept exact by eliminating it inside each Newton system.
 * Inequalities are ordered h_0..h_{d-1} = -x_i, h_d = budget, h_{d+1} = risk.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cgm/baselines.hpp"
#include "cgm/error.hpp"
#include "cgm/problems.hpp"
#include "cgm/types.hpp"

namespace cgm {

struct KktCertificate {
  double stationarity_norm = 0.0;
  double max_primal_violation = 0.0;
  double max_complementarity = 0.0;
  double equality_residual = 0.0;
  double dual_violation = 0.0;  ///< max(0, -min lambda)

  double worst() const {
    return std::max({stationarity_norm, max_primal_violation, max_complementarity,
                     equality_residual, dual_violation});
  }
  bool ok(double tol = 1e-8) const { return worst() <= tol; }
};

struct RapMultipliers {
  Vector lambda;  ///< size d + 2
  double nu = 0.0;
};

struct RapReference {
  Vector x;
  double f = 0.0;
  RapMultipliers multipliers;
  KktCertificate certificate;
  std::vector<double> outer_f;  ///< objective at each centring
  std::size_t newton_iterations = 0;
  double final_t = 0.0;
};

struct BarrierOptions {
  double tol = 1e-10;
  double decrease_factor = 10.0;
  double newton_tol = 1e-12;  ///< on lambda^2 / 2
  double armijo = 0.01;
  std::size_t max_newton = 200;
};

namespace detail {

inline Vector rap_inequalities(const RapData& data, const Vector& x) {
  const Index d = data.dim();
  Vector h(d + 2);
  h.head(d) = -x;
  h[d] = data.r.dot(x) - data.Rmax;
  h[d + 1] = x.dot(data.E * x) - data.Emax;
  return h;
}

/// Sigma x + a + sum_k lambda_k grad h_k(x)  (without the equality term).
inline Vector rap_lagrangian_gradient(const RapData& data, const Vector& x, const Vector& lambda) {
  const Index d = data.dim();
  Vector s = data.gradient(x);
  s -= lambda.head(d);
  s += lambda[d] * data.r;
  s += lambda[d + 1] * 2.0 * (data.E * x);
  return s;
}

inline bool strictly_feasible(const Vector& h) { return (h.array() < 0.0).all(); }

/// t f(x) - sum log(-h_k(x)); +inf outside the domain.
inline double barrier_value(const RapData& data, const Vector& x, double t) {
  const Vector h = rap_inequalities(data, x);
  if (!strictly_feasible(h)) return std::numeric_limits<double>::infinity();
  return t * data.objective(x) - (-h.array()).log().sum();
}

/// Point in the simplex with budget and risk strictly below their bounds,
/// found by projected subgradient on max(budget, risk).
inline Vector rap_interior_point(const RapData& data) {
  const Index d = data.dim();
  auto worst = [&](const Vector& x) {
    return std::max(data.r.dot(x) - data.Rmax, x.dot(data.E * x) - data.Emax);
  };
  Vector x = Vector::Constant(d, 1.0 / static_cast<double>(d));
  Vector best = x;
  double best_val = worst(x);
  for (int k = 0; k < 500; ++k) {
    const double budget = data.r.dot(x) - data.Rmax;
    const double risk = x.dot(data.E * x) - data.Emax;
    Vector g = budget >= risk ? Vector(data.r) : Vector(2.0 * (data.E * x));
    g.array() -= g.mean();  // tangent to the simplex
    const double gn = g.norm();
    if (gn == 0.0) break;
    x = project_simplex(x - (0.5 / std::sqrt(static_cast<double>(k + 1))) * g / gn /
                                std::sqrt(static_cast<double>(d)));
    const double val = worst(x);
    if (val < best_val) {
      best_val = val;
      best = x;
    }
  }
  return best;
}

/**
 * Barrier multipliers 1/(-t h_k) are only accurate to the centring tolerance
 * scaled by the Hessian, which is huge on nearly active bounds. Re-estimate
 * them on the active set: nu and the active budget/risk multipliers by least
 * squares over the inactive coordinates, then each active bound multiplier
 * from its own stationarity component.
 */
inline RapMultipliers polish_multipliers(const RapData& data, const Vector& x, double t,
                                         const RapMultipliers& barrier) {
  const Index d = data.dim();
  const Vector h = rap_inequalities(data, x);
  const double threshold = 1.0 / std::sqrt(t);

  std::vector<Index> inactive;
  for (Index i = 0; i < d; ++i)
    if (x[i] > threshold) inactive.push_back(i);
  const bool budget_active = -h[d] <= threshold * std::max(1.0, data.Rmax);
  const bool risk_active = -h[d + 1] <= threshold * std::max(1.0, data.Emax);

  RapMultipliers out = barrier;
  if (!budget_active) out.lambda[d] = 1.0 / (-t * h[d]);
  if (!risk_active) out.lambda[d + 1] = 1.0 / (-t * h[d + 1]);

  const Vector grad = data.gradient(x);
  const Vector risk_grad = 2.0 * (data.E * x);
  const Index cols = 1 + (budget_active ? 1 : 0) + (risk_active ? 1 : 0);
  const Index rows = static_cast<Index>(inactive.size());
  if (rows < cols) return barrier;

  // grad_i + lambda_i(inactive, fixed) + sum_j c_j A_ij = 0 on inactive rows.
  Matrix A(rows, cols);
  Vector rhs(rows);
  for (Index k = 0; k < rows; ++k) {
    const Index i = inactive[static_cast<std::size_t>(k)];
    Index c = 0;
    A(k, c++) = 1.0;
    if (budget_active) A(k, c++) = data.r[i];
    if (risk_active) A(k, c++) = risk_grad[i];
    rhs[k] = -(grad[i] - out.lambda[i] + (budget_active ? 0.0 : out.lambda[d] * data.r[i]) +
               (risk_active ? 0.0 : out.lambda[d + 1] * risk_grad[i]));
  }
  const Vector sol = A.colPivHouseholderQr().solve(rhs);
  Index c = 0;
  out.nu = sol[c++];
  if (budget_active) out.lambda[d] = sol[c++];
  if (risk_active) out.lambda[d + 1] = sol[c++];

  for (Index i = 0; i < d; ++i) {
    if (x[i] > threshold) continue;
    out.lambda[i] = grad[i] + out.lambda[d] * data.r[i] + out.lambda[d + 1] * risk_grad[i] + out.nu;
  }
  return out;
}

}  // namespace detail

/// Stationarity, feasibility and complementarity residuals at (x, lambda, nu).
inline KktCertificate kkt_residual(const RapData& data, const Vector& x,
                                   const RapMultipliers& multipliers) {
  const Index d = data.dim();
  if (multipliers.lambda.size() != d + 2) {
    throw Error(ErrorCode::ValidationError, "expected d + 2 inequality multipliers");
  }
  const Vector h = detail::rap_inequalities(data, x);
  KktCertificate out;
  Vector s = detail::rap_lagrangian_gradient(data, x, multipliers.lambda);
  s.array() += multipliers.nu;
  out.stationarity_norm = s.norm();
  out.max_primal_violation = std::max(0.0, h.maxCoeff());
  out.max_complementarity = (multipliers.lambda.array() * h.array()).abs().maxCoeff();
  out.equality_residual = std::abs(x.sum() - 1.0);
  out.dual_violation = std::max(0.0, -multipliers.lambda.minCoeff());
  return out;
}

inline RapReference solve_rap_reference(const RapData& data, const BarrierOptions& options = {}) {
  const Index d = data.dim();
  const Index m = d + 2;
  if (!(options.decrease_factor > 1.0) || !(options.tol > 0.0)) {
    throw Error(ErrorCode::ValidationError, "barrier needs decrease factor > 1 and tol > 0");
  }

  const Vector x0 = Vector::Constant(d, 1.0 / static_cast<double>(d));
  Vector x = 0.99 * x0 + 0.01 * detail::rap_interior_point(data);
  if (!detail::strictly_feasible(detail::rap_inequalities(data, x))) {
    throw Error(ErrorCode::StartInfeasible, "no strictly interior point found");
  }

  RapReference out;
  const Vector ones = Vector::Ones(d);
  double t = 1.0;
  double w = 0.0;
  for (;;) {
    // Centring step: damped Newton on t f - sum log(-h) over {1^T x = 1}.
    for (std::size_t it = 0;; ++it) {
      if (it >= options.max_newton) {
        throw Error(ErrorCode::BarrierFailure,
                    "Newton did not converge at t = " + std::to_string(t));
      }
      const Vector h = detail::rap_inequalities(data, x);
      const Vector inv = (-h).cwiseInverse();
      const Vector Ex = data.E * x;
      const Vector risk_grad = 2.0 * Ex;

      Vector g = t * data.gradient(x);
      g -= inv.head(d);
      g += inv[d] * data.r;
      g += inv[d + 1] * risk_grad;

      Matrix H = t * data.Sigma;
      H.diagonal() += inv.head(d).cwiseAbs2();
      H += (inv[d] * inv[d]) * data.r * data.r.transpose();
      H += (inv[d + 1] * inv[d + 1]) * risk_grad * risk_grad.transpose();
      H += (2.0 * inv[d + 1]) * data.E;

      Eigen::LDLT<Matrix> ldlt(H);
      if (ldlt.info() != Eigen::Success) {
        throw Error(ErrorCode::BarrierFailure, "barrier Hessian factorisation failed");
      }
      const Vector Hg = ldlt.solve(g);
      const Vector H1 = ldlt.solve(ones);
      w = -ones.dot(Hg) / ones.dot(H1);
      Vector dx = -(Hg + w * H1);
      dx.array() -= dx.mean();  // keep 1^T dx = 0 exactly up to roundoff
      const double decrement_sq = -g.dot(dx);
      ++out.newton_iterations;
      if (decrement_sq / 2.0 <= options.newton_tol) break;

      const double phi = t * data.objective(x) - (-h.array()).log().sum();
      const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(phi);
      double step = 1.0;
      bool accepted = false;
      for (int k = 0; k < 80; ++k) {
        const Vector trial = x + step * dx;
        const double phi_trial = detail::barrier_value(data, trial, t);
        if (phi_trial <= phi - options.armijo * step * decrement_sq + roundoff) {
          x = trial;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        // Decrement is at the roundoff floor of phi; treat as centred.
        if (decrement_sq <= 1e3 * roundoff) break;
        throw Error(ErrorCode::BarrierFailure,
                    "line search failed at t = " + std::to_string(t));
      }
    }
    out.outer_f.push_back(data.objective(x));
    if (static_cast<double>(m) / t <= options.tol) break;
    t *= options.decrease_factor;
  }

  const Vector h = detail::rap_inequalities(data, x);
  out.x = x;
  out.f = data.objective(x);
  out.final_t = t;
  out.multipliers.lambda = (-t * h).cwiseInverse();
  const Vector s = detail::rap_lagrangian_gradient(data, x, out.multipliers.lambda);
  out.multipliers.nu = -s.mean();
  out.certificate = kkt_residual(data, x, out.multipliers);

  const RapMultipliers polished = detail::polish_multipliers(data, x, t, out.multipliers);
  const KktCertificate polished_cert = kkt_residual(data, x, polished);
  if (polished_cert.worst() < out.certificate.worst()) {
    out.multipliers = polished;
    out.certificate = polished_cert;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cache: one line per instance, "d seed f nu x_1..x_d lambda_1..lambda_{d+2}".
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

class ReferenceCache {
 public:
  explicit ReferenceCache(std::filesystem::path path) : path_(std::move(path)) { load(); }

  std::optional<RapReference> find(Index d, std::uint64_t seed, const RapData& data) const {
    const auto it = entries_.find({d, seed});
    if (it == entries_.end()) return std::nullopt;
    RapReference ref = it->second;
    ref.certificate = kkt_residual(data, ref.x, ref.multipliers);
    return ref;
  }

  void store(Index d, std::uint64_t seed, const RapReference& ref) {
    entries_[{d, seed}] = ref;
    save();
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  void load() {
    std::ifstream in(path_);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      Index d = 0;
      std::uint64_t seed = 0;
      RapReference ref;
      if (!(ss >> d >> seed >> ref.f >> ref.multipliers.nu) || d < 1) continue;
      ref.x.resize(d);
      ref.multipliers.lambda.resize(d + 2);
      bool ok = true;
      for (Index i = 0; i < d && ok; ++i) ok = static_cast<bool>(ss >> ref.x[i]);
      for (Index i = 0; i < d + 2 && ok; ++i) ok = static_cast<bool>(ss >> ref.multipliers.lambda[i]);
      if (ok) entries_[{d, seed}] = std::move(ref);
    }
  }

  void save() const {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    const std::filesystem::path tmp = path_.string() + ".tmp";
    {
      std::ofstream outf(tmp, std::ios::binary | std::ios::trunc);
      if (!outf) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
      for (const auto& [key, ref] : entries_) {
        outf << key.first << ' ' << key.second << ' ' << detail::format_double(ref.f) << ' '
             << detail::format_double(ref.multipliers.nu);
        for (Index i = 0; i < ref.x.size(); ++i) outf << ' ' << detail::format_double(ref.x[i]);
        for (Index i = 0; i < ref.multipliers.lambda.size(); ++i)
          outf << ' ' << detail::format_double(ref.multipliers.lambda[i]);
        outf << '\n';
      }
    }
    std::filesystem::rename(tmp, path_);
  }

  std::filesystem::path path_;
  std::map<std::pair<Index, std::uint64_t>, RapReference> entries_;
};

}  // namespace cgm
