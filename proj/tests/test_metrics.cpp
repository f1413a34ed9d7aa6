#include <gtest/gtest.h>

#include <cmath>

#include "cgm/baselines.hpp"
#include "cgm/cgm_min.hpp"
#include "cgm/cgm_vi.hpp"
#include "cgm/metrics.hpp"
#include "cgm/reference_solver.hpp"
#include "test_support.hpp"

using namespace cgm;

namespace {

// max over vertex pairs (e_i, e_j) of <F(x), x - y>.
double gap_by_vertices(const Vector& x, double beta) {
  const Index d = x.size() / 2;
  const Vector F = hbg_operator(x, beta);
  double best = -1e300;
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) {
      Vector y = Vector::Zero(2 * d);
      y[i] = 1.0;
      y[d + j] = 1.0;
      best = std::max(best, F.dot(x - y));
    }
  }
  return best;
}

struct RapFixture {
  MinProblem problem = rap_generate(50, 42);
  RapReference ref = solve_rap_reference(*problem.rap);
  double f_unc = rap_unconstrained_min(*problem.rap).f;
  MinReference reference() const { return {ref.x, ref.f}; }
};

const RapFixture& rap_fixture() {
  static const RapFixture f;
  return f;
}

}  // namespace

TEST(Metrics, GapAtSolutionIsZero) {
  for (Index d : {1, 3, 50}) {
    for (double beta : {0.2, 0.5, 0.8}) {
      const Vector xs = Vector::Constant(2 * d, 1.0 / static_cast<double>(d));
      EXPECT_NEAR(hbg_gap_closed_form(xs, beta), 0.0, 1e-12);
    }
  }
}

TEST(Metrics, GapVertexExample) {
  Vector x = Vector::Zero(4);
  x[0] = 1.0;
  x[2] = 1.0;
  EXPECT_NEAR(hbg_gap_closed_form(x, 0.5), 2.0, 1e-15);
  EXPECT_NEAR(gap_by_vertices(x, 0.5), 2.0, 1e-15);
}

TEST(Metrics, GapMatchesVertexEnumeration) {
  SplitMix64 rng(10);
  for (int k = 0; k < 300; ++k) {
    const Index d = 1 + static_cast<Index>(rng.next_u64() % 5);
    const double beta = rng.uniform(0.01, 0.99);
    Vector x(2 * d);
    x.head(d) = testing_support::random_simplex_point(rng, d);
    x.tail(d) = testing_support::random_simplex_point(rng, d);
    const double g = hbg_gap_closed_form(x, beta);
    EXPECT_NEAR(g, gap_by_vertices(x, beta), 1e-12);
    EXPECT_GE(g, -1e-14);
  }
}

TEST(Metrics, MaxViolation) {
  const MinProblem rap = rap_generate(6, 3);
  EXPECT_LE(max_violation(rap, rap.x0), 1e-12);
  Vector x = rap.x0;
  x[0] = -0.1;
  EXPECT_GE(max_violation(rap, x), 0.1);

  const VIProblem game = hbg_instantiate(9, 0.3, 4);
  SplitMix64 rng(1);
  const SimplexProjector proj = simplex_projector_for(game);
  for (int k = 0; k < 20; ++k) {
    Vector y(18);
    for (Index i = 0; i < 18; ++i) y[i] = rng.uniform(-1.0, 1.0);
    EXPECT_LE(max_violation(game, proj(y)), 1e-12);
  }
  AuxConstraint aux{game.x0, 0.01};
  Vector far = game.x0;
  far[0] += 1.0;
  EXPECT_GE(max_violation(game, far, aux), 0.99 - 1e-12);
}

TEST(Metrics, CertifyMinPassesOnReferenceInstance) {
  const auto& fx = rap_fixture();
  for (ScheduleKind sched : {ScheduleKind::Constant, ScheduleKind::Varying}) {
    MinSolverConfig c;
    c.schedule = sched;
    c.horizon = 2000;
    const MinTrace tr = cgm_min_run(fx.problem, c, fx.reference());
    const BoundsReport rep = certify_min(tr, fx.problem, fx.reference(), fx.f_unc);
    EXPECT_TRUE(rep.all_pass()) << to_string(sched);
    EXPECT_EQ(rep.certificates.size(), 6u);
    ASSERT_TRUE(rep.constant("C1").has_value());
    ASSERT_TRUE(rep.constant("C2").has_value());
    const Certificate* contraction = rep.find("contraction");
    ASSERT_NE(contraction, nullptr);
    EXPECT_EQ(contraction->checked, 2000u);
  }
}

TEST(Metrics, CertifyMinNeedsReference) {
  const auto& fx = rap_fixture();
  MinSolverConfig c;
  c.schedule = ScheduleKind::Varying;
  c.horizon = 5;
  const MinTrace tr = cgm_min_run(fx.problem, c);
  try {
    certify_min(tr, fx.problem, std::nullopt, fx.f_unc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ReferenceMissing);
  }
}

TEST(Metrics, TruncatedToStart) {
  const auto& fx = rap_fixture();
  MinSolverConfig c;
  c.schedule = ScheduleKind::Varying;
  c.horizon = 20;
  const MinTrace tr = truncate(cgm_min_run(fx.problem, c, fx.reference()), 0);
  const BoundsReport rep = certify_min(tr, fx.problem, fx.reference(), fx.f_unc);
  EXPECT_EQ(rep.find("contraction")->checked, 0u);
  EXPECT_EQ(rep.find("x_bound_C2")->checked, 1u);
  EXPECT_TRUE(rep.all_pass());
}

TEST(Metrics, CorruptedVelocityFailsC1) {
  const auto& fx = rap_fixture();
  MinSolverConfig c;
  c.horizon = 300;
  MinTrace tr = cgm_min_run(fx.problem, c, fx.reference());
  ASSERT_TRUE(certify_min(tr, fx.problem, fx.reference(), fx.f_unc).find("v_bound_C1")->pass);
  for (auto& it : tr.steps) {
    it.v *= 10.0;
    it.v_norm *= 10.0;
  }
  const BoundsReport rep = certify_min(tr, fx.problem, fx.reference(), fx.f_unc);
  EXPECT_FALSE(rep.find("v_bound_C1")->pass);
  EXPECT_FALSE(rep.all_pass());
}

TEST(Metrics, SlackMonotonicity) {
  const auto& fx = rap_fixture();
  MinSolverConfig c;
  c.schedule = ScheduleKind::Varying;
  c.horizon = 500;
  MinTrace tr = cgm_min_run(fx.problem, c, fx.reference());
  for (auto& it : tr.steps) it.v_norm *= 7.0;  // make some certificates fail
  const std::vector<SlackPolicy> policies{{0.0, 0.0}, {1e-9, 1e-7}, {1e-3, 1e-2}, {1.0, 1.0},
                                          {100.0, 10.0}};
  std::vector<BoundsReport> reports;
  for (const auto& p : policies) reports.push_back(certify_min(tr, fx.problem, fx.reference(), fx.f_unc, p));
  for (std::size_t k = 1; k < reports.size(); ++k) {
    for (std::size_t i = 0; i < reports[k].certificates.size(); ++i) {
      if (reports[k - 1].certificates[i].pass) {
        EXPECT_TRUE(reports[k].certificates[i].pass);
      }
      EXPECT_LE(reports[k].certificates[i].failures, reports[k - 1].certificates[i].failures);
    }
  }
}

TEST(Metrics, EmpiricalLgGrowsWithTrajectory) {
  const auto& fx = rap_fixture();
  MinSolverConfig c;
  c.schedule = ScheduleKind::Varying;
  c.horizon = 200;
  const MinTrace tr = cgm_min_run(fx.problem, c, fx.reference());
  double prev = 0.0;
  for (std::size_t t : {0u, 1u, 5u, 20u, 100u, 200u}) {
    const double Lg = certify_min(truncate(tr, t), fx.problem, fx.reference(), fx.f_unc).empirical_Lg;
    EXPECT_GE(Lg, prev);
    prev = Lg;
  }
}

TEST(Metrics, CertifyViPasses) {
  const VIProblem game = hbg_instantiate(50, 0.8, 42);
  VISolverConfig c;
  c.horizon = 1000;
  const VITrace tr = cgm_vi_run(game, c);
  const BoundsReport rep = certify_vi(tr, game);
  EXPECT_TRUE(rep.all_pass());
  EXPECT_NE(rep.find("gap_ergodic"), nullptr);
  EXPECT_NE(rep.find("feasibility_nonergodic"), nullptr);
  EXPECT_TRUE(rep.constant("C3").has_value());
  EXPECT_TRUE(rep.constant("C4").has_value());
}

TEST(Metrics, CertifyViSingleIterate) {
  const VIProblem game = hbg_instantiate(5, 0.6, 1);
  VISolverConfig c;
  c.horizon = 1;
  const VITrace tr = cgm_vi_run(game, c);
  const BoundsReport rep = certify_vi(tr, game);
  const Certificate* gap = rep.find("gap_ergodic");
  ASSERT_NE(gap, nullptr);
  EXPECT_EQ(gap->checked, 1u);
  EXPECT_NEAR(gap->worst_lhs, hbg_gap_closed_form(game.x0, 0.6), 1e-15);
  EXPECT_TRUE(rep.all_pass());
}

TEST(Metrics, ViGapBoundFormula) {
  VIProblem p;
  p.mu = 1.0;
  p.ell_F = 1.0;
  p.diameter_D = 1.0;
  p.B = 0.0;
  // kappa = 1, Delta = 1, ||F0||^2 = 1, T = 1:
  // 2 * 7 * 15 / (1 * 30) + 36 / 30 = 7 + 1.2
  EXPECT_NEAR(vi_gap_bound(p, 1.0, 1.0, 1), 8.2, 1e-12);
}
