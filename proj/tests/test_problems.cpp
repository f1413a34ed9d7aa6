#include <gtest/gtest.h>

#include <cmath>

#include "cgm/problems.hpp"
#include "cgm/rng.hpp"
#include "test_support.hpp"

using namespace cgm;

TEST(Problems, RapShapeAndStart) {
  const MinProblem p = rap_generate(50, 42);
  EXPECT_EQ(p.dim(), 50);
  EXPECT_EQ(p.constraints.size(), 54u);
  EXPECT_GE(p.mu, 5.0 - 1e-9);
  EXPECT_LE(p.mu, p.ell_f);
  // Sum and budget rows are exactly tight at x0 up to roundoff; risk too.
  for (std::size_t i = 50; i < 54; ++i) EXPECT_NEAR(p.constraints[i].value(p.x0), 0.0, 1e-12);
  EXPECT_TRUE(violated_set(p.constraints, p.x0).size() <= 4u);
  for (const auto& vc : violated_set(p.constraints, p.x0)) EXPECT_LE(vc.value, 1e-12);
}

TEST(Problems, RapEigenvaluesMatchSpectrum) {
  const MinProblem p = rap_generate(30, 3);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(p.rap->Sigma);
  EXPECT_NEAR(p.mu, eig.eigenvalues().minCoeff(), 1e-10);
  EXPECT_NEAR(p.ell_f, eig.eigenvalues().maxCoeff(), 1e-9);
  // rank-10 perturbation of 5 I in dimension 30 leaves 5 as an eigenvalue
  EXPECT_NEAR(p.mu, 5.0, 1e-9);
  Eigen::SelfAdjointEigenSolver<Matrix> eigE(p.rap->E);
  EXPECT_NEAR(p.constraints.back().smoothness, 2.0 * eigE.eigenvalues().maxCoeff(), 1e-9);
}

TEST(Problems, RapRegenerationIsBitIdentical) {
  const MinProblem a = rap_generate(20, 9);
  const MinProblem b = rap_generate(20, 9);
  EXPECT_TRUE(a.rap->Sigma == b.rap->Sigma);
  EXPECT_TRUE(a.rap->E == b.rap->E);
  EXPECT_TRUE(a.rap->a == b.rap->a);
  EXPECT_TRUE(a.rap->r == b.rap->r);
  EXPECT_EQ(a.rap->Rmax, b.rap->Rmax);
  EXPECT_EQ(a.rap->Emax, b.rap->Emax);
  const MinProblem c = rap_generate(20, 10);
  EXPECT_FALSE(a.rap->Sigma == c.rap->Sigma);
}

TEST(Problems, RapRecipe) {
  const MinProblem p = rap_generate(40, 1);
  const RapData& d = *p.rap;
  EXPECT_NEAR(d.Rmax, d.r.mean(), 1e-15);
  EXPECT_NEAR(d.Emax, d.E.sum() / 1600.0, 1e-12);
  EXPECT_GE(d.r.minCoeff(), 0.1);
  EXPECT_GE(d.a.minCoeff(), 0.0);
  const double sigma_bar = d.Sigma.diagonal().array().sqrt().mean();
  EXPECT_LE(d.a.maxCoeff(), sigma_bar);
  EXPECT_TRUE(d.Sigma.isApprox(d.Sigma.transpose()));
  EXPECT_THROW(rap_generate(1, 0), Error);
}

TEST(Problems, GradientsMatchFiniteDifferences) {
  SplitMix64 rng(3);
  const MinProblem rap = rap_generate(8, 5);
  const VIProblem hbg = hbg_instantiate(4, 0.3, 5);
  auto check = [&](const ConstraintList& cs, Index n) {
    for (int k = 0; k < 20; ++k) {
      Vector x(n);
      for (Index i = 0; i < n; ++i) x[i] = rng.uniform(-1.0, 1.0);
      for (const auto& c : cs) {
        const Vector g = c.gradient(x);
        const Vector fd = testing_support::central_difference(c.value, x);
        EXPECT_LE((g - fd).norm(), 1e-5 * std::max(1.0, g.norm())) << c.name;
      }
    }
  };
  check(rap.constraints, 8);
  check(hbg.constraints, 8);
  for (int k = 0; k < 10; ++k) {
    Vector x(8);
    for (Index i = 0; i < 8; ++i) x[i] = rng.uniform(-1.0, 1.0);
    const Vector fd = testing_support::central_difference(rap.value_f, x);
    EXPECT_LE((rap.grad_f(x) - fd).norm(), 1e-5 * std::max(1.0, fd.norm()));
  }
}

TEST(Problems, ConstraintsAreConvex) {
  SplitMix64 rng(4);
  const MinProblem rap = rap_generate(10, 8);
  for (int k = 0; k < 200; ++k) {
    Vector x(10), y(10);
    for (Index i = 0; i < 10; ++i) {
      x[i] = rng.uniform(-1.0, 1.0);
      y[i] = rng.uniform(-1.0, 1.0);
    }
    for (const auto& c : rap.constraints) {
      EXPECT_LE(c.value(0.5 * x + 0.5 * y),
                0.5 * c.value(x) + 0.5 * c.value(y) + 1e-12 * (1.0 + std::abs(c.value(x))));
    }
  }
}

TEST(Problems, UnconstrainedMinimiser) {
  auto data = std::make_shared<RapData>();
  data->Sigma = 2.0 * Matrix::Identity(2, 2);
  data->a = Vector::Ones(2);
  data->r = Vector::Ones(2);
  data->E = Matrix::Identity(2, 2);
  data->Rmax = 1.0;
  data->Emax = 1.0;
  const auto m = rap_unconstrained_min(*data);
  EXPECT_NEAR(m.x[0], -0.5, 1e-15);
  EXPECT_NEAR(m.x[1], -0.5, 1e-15);
  EXPECT_NEAR(m.f, -0.5, 1e-15);

  data->a = Vector::Zero(2);
  const auto z = rap_unconstrained_min(*data);
  EXPECT_EQ(z.x.norm(), 0.0);
  EXPECT_EQ(z.f, 0.0);

  const MinProblem p = rap_generate(50, 42);
  const auto u = rap_unconstrained_min(*p.rap);
  EXPECT_LE((p.rap->Sigma * u.x + p.rap->a).norm(), 1e-10);
}

TEST(Problems, HbgConstants) {
  const VIProblem p = hbg_instantiate(5, 0.8, 1);
  EXPECT_NEAR(p.ell_F, std::sqrt(2.6), 1e-15);
  EXPECT_NEAR(p.ell_F, 1.61245, 1e-5);
  EXPECT_DOUBLE_EQ(p.mu, 1.6);
  EXPECT_EQ(p.diameter_D, 2.0);
  EXPECT_EQ(p.constraints.size(), 14u);
  EXPECT_NEAR(p.x0.head(5).sum(), 1.0, 1e-14);
  EXPECT_NEAR(p.x0.tail(5).sum(), 1.0, 1e-14);
  EXPECT_GE(p.x0.minCoeff(), 0.0);
  EXPECT_THROW(hbg_instantiate(5, 1.5, 1), Error);
  EXPECT_THROW(hbg_instantiate(5, 0.0, 1), Error);
}

TEST(Problems, HbgOperatorNormFromSvd) {
  for (double beta : {0.1, 0.5, 0.8}) {
    const Index d = 3;
    Matrix M(2 * d, 2 * d);
    for (Index j = 0; j < 2 * d; ++j) M.col(j) = hbg_operator(Vector::Unit(2 * d, j), beta);
    Eigen::JacobiSVD<Matrix> svd(M);
    EXPECT_NEAR(svd.singularValues()[0], hbg_lipschitz(beta), 1e-12);
    EXPECT_NEAR(svd.singularValues()[2 * d - 1], hbg_lipschitz(beta), 1e-12);
  }
}

TEST(Problems, HbgStrongMonotonicityAndLipschitz) {
  SplitMix64 rng(8);
  const double beta = 0.35;
  const VIProblem p = hbg_instantiate(6, beta, 2);
  for (int k = 0; k < 200; ++k) {
    Vector x(12), y(12);
    for (Index i = 0; i < 12; ++i) {
      x[i] = rng.uniform(-2.0, 2.0);
      y[i] = rng.uniform(-2.0, 2.0);
    }
    const Vector dF = p.op_F(x) - p.op_F(y);
    const Vector dx = x - y;
    EXPECT_GE(dF.dot(dx), 2.0 * beta * dx.squaredNorm() * (1.0 - 1e-12));
    EXPECT_LE(dF.squaredNorm(), p.ell_F * p.ell_F * dx.squaredNorm() * (1.0 + 1e-12) + p.B);
  }
}

TEST(Problems, RelaxedLipschitzWithOffset) {
  // F(x) = x + s(x) with |s| <= 1/2 componentwise-bounded noise satisfies the
  // relaxed condition with ell_F^2 = 2, B = 2 * n.
  SplitMix64 rng(12);
  const Index n = 4;
  auto F = [](const Vector& x) {
    Vector out = x;
    for (Index i = 0; i < x.size(); ++i) out[i] += 0.5 * std::sin(7.0 * x[i] * x[i]);
    return out;
  };
  for (int k = 0; k < 500; ++k) {
    Vector x(n), y(n);
    for (Index i = 0; i < n; ++i) {
      x[i] = rng.uniform(-3.0, 3.0);
      y[i] = rng.uniform(-3.0, 3.0);
    }
    EXPECT_LE((F(x) - F(y)).squaredNorm(), 2.0 * (x - y).squaredNorm() + 2.0 * n);
  }
}

TEST(Problems, ViolatedSetIsStrict) {
  const MinProblem p = rap_generate(5, 1);
  Vector x = p.x0;
  EXPECT_TRUE(violated_set(p.constraints, Vector::Constant(5, 0.2) * 0.5).size() >= 1u);
  x[0] = -0.1;
  x[1] += 0.1;
  const auto v = violated_set(p.constraints, x);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v.front().index, 0u);
  EXPECT_DOUBLE_EQ(v.front().value, 0.1);

  ConstraintList boundary{constraints::linear(Vector::Ones(2), 1.0, "edge")};
  EXPECT_TRUE(violated_set(boundary, Vector::Constant(2, 0.5)).empty());
}

TEST(Problems, PolytopeRows) {
  ConstraintList cs{constraints::block_sum(0, 3, 3, 1.0, "sum<=1")};
  const Vector x = Vector::Constant(3, 0.4);  // sum 1.2
  const VelocityPolytope p = build_polytope(cs, x, 1.0);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.row(0).normal, Vector::Ones(3));
  EXPECT_NEAR(p.row(0).rhs, -0.2, 1e-15);
  EXPECT_TRUE(build_polytope(cs, Vector::Constant(3, 0.1), 1.0).empty());
  EXPECT_THROW(build_polytope(cs, x, 0.0), Error);
}

TEST(Problems, VelocityPolytopeMembership) {
  const auto summary = testing_support::membership_trials(1000, 77);
  EXPECT_EQ(summary.failures, 0u);
  EXPECT_EQ(summary.trials, 2000u);
  EXPECT_GT(summary.nonempty, 500u);
}
