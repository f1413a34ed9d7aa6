#pragma once

/**
 * @file
 * @brief Optimality/feasibility measures and post-hoc certificates that the
 * convergence bounds hold along a realised trajectory.
 *
 * Every certificate is a family of inequalities lhs_t <= rhs_t evaluated over
 * the trace. A family passes when lhs_t <= rhs_t + slack_t for every t, with
 * slack_t = abs + rel |lhs_t|. The report keeps the tightest instance
 * (smallest rhs - lhs) so one line summarises each bound.
 *
 * L_g (the largest constraint-gradient norm) is taken as the empirical
 * maximum over the realised trajectory rather than a supremum over a ball.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cgm/cgm_min.hpp"
#include "cgm/cgm_vi.hpp"
#include "cgm/error.hpp"
#include "cgm/problems.hpp"
#include "cgm/types.hpp"

namespace cgm {

/// max_{y in C} <F(x), x - y> for the bilinear game on a product of simplices.
inline double hbg_gap_closed_form(const Vector& x, double beta) {
  const Index d = x.size() / 2;
  const auto x1 = x.head(d).array();
  const auto x2 = x.tail(d).array();
  const Vector F = hbg_operator(x, beta);
  const double min1 = (2.0 * beta * x1 + (1.0 - beta) * x2).minCoeff();
  const double min2 = (-(1.0 - beta) * x1 + 2.0 * beta * x2).minCoeff();
  return F.dot(x) - min1 - min2;
}

/// max(0, max_i g_i(x)).
inline double max_violation(const ConstraintList& constraints, const Vector& x) {
  return std::max(0.0, max_constraint_value(constraints, x));
}
inline double max_violation(const MinProblem& problem, const Vector& x) {
  return max_violation(problem.constraints, x);
}
inline double max_violation(const VIProblem& problem, const Vector& x,
                            const std::optional<AuxConstraint>& aux = {}) {
  double out = max_violation(problem.constraints, x);
  if (aux) out = std::max(out, aux->value(x));
  return out;
}

struct SlackPolicy {
  double absolute = 1e-9;
  double relative = 1e-7;

  double allowance(double lhs) const { return absolute + relative * std::abs(lhs); }
};

struct Certificate {
  std::string name;
  std::size_t checked = 0;
  std::size_t failures = 0;
  std::size_t worst_t = 0;
  double worst_lhs = 0.0;
  double worst_rhs = 0.0;
  double worst_margin = std::numeric_limits<double>::infinity();  ///< min rhs - lhs
  double worst_slack = 0.0;
  bool pass = true;

  void check(std::size_t t, double lhs, double rhs, const SlackPolicy& slack) {
    ++checked;
    const double margin = rhs - lhs;
    if (margin < worst_margin) {
      worst_margin = margin;
      worst_lhs = lhs;
      worst_rhs = rhs;
      worst_t = t;
      worst_slack = slack.allowance(lhs);
    }
    if (!(lhs <= rhs + slack.allowance(lhs))) {
      ++failures;
      pass = false;
    }
  }
};

struct BoundsReport {
  std::string track;  ///< "min" or "vi"
  std::vector<std::pair<std::string, double>> constants;
  double empirical_Lg = 0.0;
  std::vector<Certificate> certificates;
  std::vector<std::string> notes;

  bool all_pass() const {
    return std::all_of(certificates.begin(), certificates.end(),
                       [](const Certificate& c) { return c.pass; });
  }
  const Certificate* find(const std::string& name) const {
    for (const auto& c : certificates)
      if (c.name == name) return &c;
    return nullptr;
  }
  std::optional<double> constant(const std::string& name) const {
    for (const auto& [k, v] : constants)
      if (k == name) return v;
    return std::nullopt;
  }
};

/// Largest ||grad g_i(x)|| over the given points and constraints.
template <typename PointAt>
double empirical_gradient_bound(const ConstraintList& constraints, std::size_t count,
                                PointAt&& point_at) {
  double out = 0.0;
  for (std::size_t t = 0; t < count; ++t) {
    const Vector& x = point_at(t);
    for (const auto& c : constraints) out = std::max(out, c.gradient(x).norm());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Minimisation track
// ---------------------------------------------------------------------------

struct MinConstants {
  double C1 = 0.0;
  double C2 = 0.0;
  double f0_gap = 0.0;       ///< f(x0) - f(x*)
  double star_gap = 0.0;     ///< f(x*) - f_unconstrained
  double grad_star_norm = 0.0;
};

inline MinConstants min_constants(const MinProblem& problem, double alpha,
                                  const MinReference& reference, double f_star_unconstrained) {
  MinConstants k;
  k.f0_gap = problem.value_f(problem.x0) - reference.f_star;
  k.star_gap = reference.f_star - f_star_unconstrained;
  k.C1 = std::sqrt(4.0 * (2.0 * problem.ell_f - alpha) * k.f0_gap +
                   8.0 * problem.ell_f * k.star_gap);
  k.grad_star_norm = problem.grad_f(reference.x_star).norm();
  k.C2 = (k.grad_star_norm +
          std::sqrt(k.grad_star_norm * k.grad_star_norm + 2.0 * problem.mu * k.f0_gap)) /
         problem.mu;
  return k;
}

/**
 * @brief Certificates for a minimisation trace.
 *
 * contraction        f(x^{t+1}) - f* <= (1 - alpha eta_t)(f(x^t) - f*)
 * residual_rate      constant: f(x^T) - f* <= (f(x0) - f*)/T;
 *                    varying:  f(x^t) - f* <= (kappa-1)/(t+kappa-1) (f(x0) - f*), t >= 1
 * v_bound_step       ||v^t||^2 <= 4(2 ell_f - alpha)(f(x^t) - f*) + 8 ell_f (f* - f_unc)
 * v_bound_C1         ||v^t|| <= C1
 * x_bound_C2         ||x^t - x*|| <= C2
 * feasibility_*      the constant- or varying-step violation bounds
 *
 * The rate and feasibility families assume alpha = mu and are skipped
 * otherwise (recorded in notes).
 */
inline BoundsReport certify_min(const MinTrace& trace, const MinProblem& problem,
                                const std::optional<MinReference>& reference,
                                double f_star_unconstrained, const SlackPolicy& slack = {}) {
  if (!reference) throw Error(ErrorCode::ReferenceMissing, "certify_min needs (x*, f(x*))");
  const MinReference& ref = *reference;
  const double alpha = trace.alpha;
  const MinConstants k = min_constants(problem, alpha, ref, f_star_unconstrained);
  const std::size_t T = trace.size();
  const double mu = problem.mu;
  const double kappa = problem.kappa();
  const double ell_g = problem.ell_g();

  BoundsReport report;
  report.track = "min";
  report.empirical_Lg = empirical_gradient_bound(problem.constraints, T + 1,
                                                 [&](std::size_t t) -> const Vector& {
                                                   return trace.point(t);
                                                 });
  report.constants = {{"C1", k.C1},
                      {"C2", k.C2},
                      {"empirical_Lg", report.empirical_Lg},
                      {"ell_g", ell_g},
                      {"alpha", alpha},
                      {"mu", mu},
                      {"ell_f", problem.ell_f},
                      {"kappa", kappa},
                      {"f0_minus_fstar", k.f0_gap},
                      {"fstar_minus_func", k.star_gap}};
  report.notes.push_back("L_g is the empirical maximum of ||grad g_i|| along the trajectory");

  auto resid = [&](std::size_t t) { return trace.f_at(t) - ref.f_star; };

  Certificate contraction{.name = "contraction"};
  Certificate step{.name = "v_bound_step"};
  Certificate c1{.name = "v_bound_C1"};
  for (std::size_t t = 0; t < T; ++t) {
    const auto& it = trace.steps[t];
    contraction.check(t, resid(t + 1), (1.0 - alpha * it.eta) * resid(t), slack);
    step.check(t, it.v_norm * it.v_norm,
                4.0 * (2.0 * problem.ell_f - alpha) * resid(t) + 8.0 * problem.ell_f * k.star_gap,
                slack);
    c1.check(t, it.v_norm, k.C1, slack);
  }
  Certificate c2{.name = "x_bound_C2"};
  for (std::size_t t = 0; t <= T; ++t) c2.check(t, (trace.point(t) - ref.x_star).norm(), k.C2, slack);

  report.certificates = {contraction, step, c1, c2};

  const bool alpha_is_mu = std::abs(alpha - mu) <= 1e-12 * mu;
  if (!alpha_is_mu) {
    report.notes.push_back("alpha < mu: rate and feasibility certificates skipped");
    return report;
  }
  if (T == 0) return report;

  const double Lg = report.empirical_Lg;
  if (trace.schedule == ScheduleKind::Constant) {
    Certificate rate{.name = "residual_rate"};
    rate.check(T, resid(T), k.f0_gap / static_cast<double>(T), slack);
    report.certificates.push_back(rate);

    const double Td = static_cast<double>(trace.horizon);
    const double bound =
        k.C1 / mu * std::max(k.C1 * ell_g / (2.0 * mu), Lg) * std::log(Td) / Td;
    Certificate feas{.name = "feasibility_constant"};
    for (std::size_t t = 0; t <= T; ++t) feas.check(t, trace.max_violation_at(t), bound, slack);
    report.certificates.push_back(feas);
  } else {
    Certificate rate{.name = "residual_rate"};
    for (std::size_t t = 1; t <= T; ++t) {
      const double td = static_cast<double>(t);
      rate.check(t, resid(t), (kappa - 1.0) / (td + kappa - 1.0) * k.f0_gap, slack);
    }
    report.certificates.push_back(rate);

    Certificate feas{.name = "feasibility_varying"};
    for (std::size_t t = 1; t + 1 <= T; ++t) {
      const double td = static_cast<double>(t);
      const double denom = td + kappa + 1.0;
      const double bound = 2.0 * k.C1 / (mu * denom) * (Lg + ell_g * k.C1 / (2.0 * mu)) +
                           ell_g * k.C1 * k.C1 * std::log(td) / (mu * mu * denom);
      feas.check(t + 1, trace.max_violation_at(t + 1), bound, slack);
    }
    report.certificates.push_back(feas);
  }
  return report;
}

// ---------------------------------------------------------------------------
// VI track
// ---------------------------------------------------------------------------

struct VIConstants {
  double C3 = 0.0;
  double C4 = 0.0;
  double base = 0.0;  ///< ||F(x0)||^2 + B
};

inline VIConstants vi_constants(const VIProblem& problem, double delta, double normFx0_sq) {
  VIConstants k;
  k.base = normFx0_sq + problem.B;
  k.C3 = std::sqrt((2.0 * delta + 1.25) * k.base / (problem.ell_F * problem.ell_F));
  k.C4 = std::sqrt((16.0 * delta + 20.0) * k.base);
  return k;
}

/// Right-hand side of the ergodic gap bound at horizon T.
inline double vi_gap_bound(const VIProblem& problem, double delta, double normFx0_sq,
                           std::size_t T) {
  const double mu = problem.mu;
  const double k2 = problem.kappa() * problem.kappa();
  const double Td = static_cast<double>(T);
  const double D = problem.diameter_D;
  return 2.0 * mu * D * D * (8.0 * k2 - 1.0) * (16.0 * k2 - 1.0) / (Td * (Td + 32.0 * k2 - 3.0)) +
         (16.0 * delta + 20.0) * (normFx0_sq + problem.B) / (mu * (Td + 32.0 * k2 - 3.0));
}

/**
 * @brief Certificates for a VI trace.
 *
 * x_bound_C3, v_bound_C4, control_v_x at every iteration; the ergodic gap
 * bound (bilinear-game instances only, using the closed-form strong gap);
 * non-ergodic feasibility for t >= 1 and ergodic feasibility at T, over the
 * original constraints plus the auxiliary ball.
 */
inline BoundsReport certify_vi(const VITrace& trace, const VIProblem& problem,
                               const SlackPolicy& slack = {}) {
  const std::size_t T = trace.size();
  if (T == 0) throw Error(ErrorCode::ValidationError, "certify_vi needs at least one iterate");
  const VIConstants k = vi_constants(problem, trace.delta, trace.normFx0_sq);
  const ConstraintList all = augmented_constraints(problem, trace.aux);
  const double mu = problem.mu;
  const double k2 = trace.kappa * trace.kappa;
  const double ell_g = std::max(problem.ell_g(), 2.0);

  BoundsReport report;
  report.track = "vi";
  report.empirical_Lg = empirical_gradient_bound(all, T + 1, [&](std::size_t t) -> const Vector& {
    return trace.point(t);
  });
  const double Lg = report.empirical_Lg;
  report.constants = {{"C3", k.C3},
                      {"C4", k.C4},
                      {"empirical_Lg", Lg},
                      {"ell_g", ell_g},
                      {"delta", trace.delta},
                      {"mu", mu},
                      {"ell_F", problem.ell_F},
                      {"kappa", trace.kappa},
                      {"normFx0_sq", trace.normFx0_sq}};
  report.notes.push_back("L_g is the empirical maximum of ||grad g_i|| along the trajectory");

  Certificate c3{.name = "x_bound_C3"};
  for (std::size_t t = 0; t <= T; ++t) {
    c3.check(t, (trace.point(t) - problem.x0).norm(), k.C3, slack);
  }
  Certificate c4{.name = "v_bound_C4"};
  Certificate control{.name = "control_v_x"};
  for (std::size_t t = 0; t < T; ++t) {
    const auto& it = trace.steps[t];
    c4.check(t, it.v_norm, k.C4, slack);
    control.check(t, it.v_norm * it.v_norm,
                  8.0 * problem.ell_F * problem.ell_F * it.dist_x0 * it.dist_x0 + 10.0 * k.base,
                  slack);
  }
  report.certificates = {c3, c4, control};

  const Vector x_bar = ergodic_average(trace, T);
  if (problem.hbg_beta) {
    Certificate gap{.name = "gap_ergodic"};
    gap.check(T, hbg_gap_closed_form(x_bar, *problem.hbg_beta),
              vi_gap_bound(problem, trace.delta, trace.normFx0_sq, T), slack);
    report.certificates.push_back(gap);
  } else {
    report.notes.push_back("gap certificate needs a closed-form gap; skipped");
  }

  Certificate nonergodic{.name = "feasibility_nonergodic"};
  for (std::size_t t = 1; t + 1 <= T; ++t) {
    const double td = static_cast<double>(t);
    const double denom = td + 16.0 * k2 + 1.0;
    const double bound = 2.0 * k.C4 / (mu * denom) * (Lg + ell_g * k.C4 / (2.0 * mu)) +
                         ell_g * k.C4 * k.C4 * std::log(td) / (mu * mu * denom);
    nonergodic.check(t + 1, trace.max_violation_at(t + 1), bound, slack);
  }
  report.certificates.push_back(nonergodic);

  Certificate ergodic{.name = "feasibility_ergodic"};
  {
    const double Td = static_cast<double>(T);
    const double denom = Td + 32.0 * k2 - 3.0;
    const double bound = 4.0 * k.C4 / (mu * denom) * (Lg + ell_g * k.C4 / (2.0 * mu)) +
                         2.0 * ell_g * k.C4 * k.C4 * std::log(Td) / (mu * mu * denom);
    ergodic.check(T, max_constraint_value(all, x_bar), bound, slack);
  }
  report.certificates.push_back(ergodic);
  return report;
}

}  // namespace cgm
