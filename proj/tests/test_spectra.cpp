#include <gtest/gtest.h>

#include <cmath>

#include "sgjunction/spectra.hpp"

using namespace sgj;

namespace {

const YJunction kUnit({1.0, 1.0, 1.0});
const YJunction kMixed({1.0, 2.0, 3.0});

AssembledOperator kink_operator(double Z, const YJunction& J, double L, double h) {
  return assemble_linearized(build_mesh(J, L, h), solve_kink_shift(Z, J));
}

AssembledOperator antikink_operator(double Z, double L, double h) {
  return assemble_linearized(build_mesh(kUnit, L, h), solve_antikink_shift(Z));
}

}  // namespace

TEST(Inertia, FreeOperator) {
  const Mesh m = build_mesh(kUnit, 40.0, 0.01);
  EXPECT_EQ(inertia(assemble_free(m, 1.0), 0.0), 0u);
  const auto op = assemble_free(m, -1.0);
  EXPECT_EQ(inertia(op, 0.0), 1u);
  EXPECT_EQ(inertia(op, -1.0 / 9.0 - 0.01), 0u);
  EXPECT_EQ(inertia(op, -1.0 / 9.0 + 0.01), 1u);
}

TEST(Inertia, FreeOperatorAtMostOneNegative) {
  const Mesh m = build_mesh(kMixed, 60.0, 0.02);
  for (double Z = -5.5; Z <= 5.0; Z += 0.5) {
    const std::size_t n = inertia(assemble_free(m, Z), 0.0);
    EXPECT_EQ(n, Z < 0.0 ? 1u : 0u) << "Z=" << Z;
    EXPECT_EQ(inertia(assemble_free(m, Z), 0.0, MassKind::Lumped), n);
  }
}

TEST(Inertia, SmoothKink) {
  EXPECT_EQ(inertia(kink_operator(-6.0 / kPi, kUnit, 40.0, 0.01), 0.0), 1u);
}

TEST(Inertia, CountsMatchEigenvalues) {
  const auto op = antikink_operator(-0.5, 30.0, 0.02);
  const auto pairs = lowest_eigenpairs(op, 3);
  for (const auto& p : pairs) {
    EXPECT_EQ(inertia(op, p.mu - 1e-6), static_cast<std::size_t>(&p - pairs.data()));
    EXPECT_EQ(inertia(op, p.mu + 1e-6), static_cast<std::size_t>(&p - pairs.data()) + 1);
  }
}

TEST(Eigenpairs, FreeGroundState) {
  const Mesh m = build_mesh(kUnit, 40.0, 0.01);
  const auto op = assemble_free(m, -3.0);
  const auto pairs = lowest_eigenpairs(op, 2);
  EXPECT_NEAR(pairs[0].mu, -1.0, 1e-4);
  EXPECT_GT(pairs[1].mu, 0.0);
  EXPECT_LE(pairs[0].residual, 1e-8);

  const GraphField v = eigen_field(m, pairs[0]);
  const GraphField f = free_eigenpair(-3.0, m).field;
  const double c = l2_inner(v, f) / (l2_norm(v) * l2_norm(f));
  EXPECT_LE(std::acos(std::min(1.0, std::abs(c))), 1e-3);
}

TEST(Eigenpairs, MassNormalisedAndOrthogonal) {
  const auto op = kink_operator(-2.0, kMixed, 60.0, 0.02);
  for (MassKind kind : {MassKind::Consistent, MassKind::Lumped}) {
    EigenOptions opt;
    opt.mass = kind;
    const auto pairs = lowest_eigenpairs(op, 3, opt);
    for (std::size_t a = 0; a < pairs.size(); ++a) {
      if (a > 0) {
        EXPECT_LT(pairs[a - 1].mu, pairs[a].mu);
      }
      EXPECT_GE(pairs[a].vector[Mesh::vertex_dof], 0.0);
      for (std::size_t b = 0; b <= a; ++b) {
        const auto Mv = detail::mass_apply(op, pairs[b].vector, kind);
        EXPECT_NEAR(detail::dot(pairs[a].vector, Mv), a == b ? 1.0 : 0.0, 1e-8);
      }
    }
  }
}

TEST(Eigenpairs, SmoothKinkSignPattern) {
  const auto pairs = lowest_eigenpairs(kink_operator(-6.0 / kPi, kUnit, 40.0, 0.01), 2);
  EXPECT_LT(pairs[0].mu, 0.0);
  EXPECT_GT(pairs[1].mu, 0.0);
}

TEST(Eigenpairs, RejectsZeroCount) {
  const Mesh m = build_mesh(kUnit, 10.0, 0.1);
  EXPECT_THROW(lowest_eigenpairs(assemble_free(m, 0.0), 0), ConfigError);
}

TEST(Shooting, FreeClosedForm) {
  for (const auto& J : {kUnit, kMixed})
    for (double frac : {0.2, 0.5, 0.9}) {
      const double Z = -frac * J.speed_sum();
      const double mu0 = -Z * Z / (J.speed_sum() * J.speed_sum());
      const double L = 40.0 * J.max_speed() / frac;
      for (double V : {0.0, 1.0}) {
        const double got = shooting_eigenvalue(shooting_problem_constant(Z, J, V, L, 0.0025));
        EXPECT_LE(std::abs(got - (mu0 + V)) / std::abs(mu0 + V), 1e-8)
            << "Z=" << Z << " V=" << V;
      }
    }
}

TEST(Shooting, NoBoundStateForPositiveCoupling) {
  EXPECT_THROW(shooting_eigenvalue(shooting_problem_constant(1.0, kUnit, 0.0, 40.0, 0.01)),
               NoBoundStateError);
}

TEST(Shooting, SecularRootLiesAtEigenvalue) {
  const ShootingSolver s(shooting_problem_constant(-1.5, kUnit, 0.0, 80.0, 0.005));
  const double mu = s.ground_state();
  EXPECT_LE(std::abs(s.flux_residual(mu)), 1e-9);
  EXPECT_GT(std::abs(s.flux_residual(0.0)), 1e-3);
  EXPECT_LE(s.lower_bound(), mu);
}

TEST(Shooting, AgreesWithBisectionForProfiles) {
  const double h = 0.02, L = 30.0;
  const double tol = std::max(1e-6, 5.0 * h * h);
  for (double Z : {-6.0 / kPi, -2.5, -0.5}) {
    const Profile p = solve_kink_shift(Z, kUnit);
    const double mu = lowest_eigenpairs(assemble_linearized(build_mesh(kUnit, L, h), p), 1)[0].mu;
    EXPECT_NEAR(shooting_eigenvalue(p, L, h / 4), mu, tol) << "kink Z=" << Z;
  }
  for (double Z : {-2.0 / kPi, -0.25}) {
    const Profile p = solve_antikink_shift(Z);
    const double mu = lowest_eigenpairs(assemble_linearized(build_mesh(kUnit, L, h), p), 1)[0].mu;
    EXPECT_NEAR(shooting_eigenvalue(p, L, h / 4), mu, tol) << "anti-kink Z=" << Z;
  }
}

TEST(Shooting, MixedSpeedKink) {
  const double h = 0.02, L = 90.0;
  const Profile p = solve_kink_shift(-3.0, kMixed);
  const double mu = lowest_eigenpairs(assemble_linearized(build_mesh(kMixed, L, h), p), 1)[0].mu;
  EXPECT_NEAR(shooting_eigenvalue(p, L, h / 4), mu, 5.0 * h * h);
}

TEST(Report, SmoothKinkCertifies) {
  const auto op = kink_operator(-6.0 / kPi, kUnit, 30.0, 0.02);
  const auto r = spectral_report(op, shooting_problem(solve_kink_shift(-6.0 / kPi, kUnit), 30.0, 0.005));
  EXPECT_EQ(r.morse_index, 1u);
  EXPECT_EQ(r.negative_eigenvalues.size(), r.morse_index);
  EXPECT_GT(r.kernel_gap, 0.0);
  ASSERT_TRUE(r.oracle_mu0.has_value());
  EXPECT_NEAR(*r.oracle_mu0, r.lowest_eigenvalue, 2e-3);
  const auto c = certify_criterion(r);
  EXPECT_TRUE(c.pass) << c.diagnosis;
  EXPECT_DOUBLE_EQ(c.predicted_growth_rate, std::sqrt(-r.lowest_eigenvalue));
}

TEST(Report, FreePositiveCouplingFails) {
  const auto r = spectral_report(assemble_free(build_mesh(kUnit, 30.0, 0.02), 1.0));
  EXPECT_EQ(r.morse_index, 0u);
  const auto c = certify_criterion(r);
  EXPECT_FALSE(c.pass);
  EXPECT_NE(c.diagnosis.find("morse index 0"), std::string::npos);
}

TEST(Report, FloorsAreEnforced) {
  const auto r = spectral_report(kink_operator(-0.5, kUnit, 30.0, 0.02));
  CertificationFloors f;
  f.gap_floor = 10.0;
  EXPECT_FALSE(certify_criterion(r, f).pass);
  f = {};
  f.r0_floor = 10.0;
  const auto c = certify_criterion(r, f);
  EXPECT_FALSE(c.pass);
  EXPECT_NE(c.diagnosis.find("r0"), std::string::npos);
}

TEST(Report, KinkSweepCertifiesEverywhere) {
  const double h = 0.02, g = 10.0 * h * h;
  for (int k = 0; k < 20; ++k) {
    const double Z = -2.9 + 0.14 * k;
    const auto op = kink_operator(Z, kUnit, 30.0, h);
    const auto r = spectral_report(op);
    EXPECT_EQ(r.morse_index, 1u) << "Z=" << Z;
    EXPECT_TRUE(certify_criterion(r).pass) << "Z=" << Z;
    EXPECT_EQ(inertia(op, g) - inertia(op, -g), 0u) << "Z=" << Z;
  }
}

TEST(Report, MorseIndexStableUnderRefinement) {
  for (double Z : {-2.7, -1.2, -0.3})
    for (double h : {0.04, 0.02, 0.01})
      EXPECT_EQ(inertia(kink_operator(Z, kMixed, 60.0, h), 0.0), 1u) << Z << " " << h;
  for (double Z : {-0.9, -0.4})
    for (double h : {0.04, 0.02, 0.01})
      EXPECT_EQ(inertia(antikink_operator(Z, 30.0, h), 0.0), 1u) << Z << " " << h;
}

TEST(EdgeScan, AntiKinkStabilises) {
  std::vector<AssembledOperator> fam;
  for (double L : {20.0, 40.0, 80.0}) fam.push_back(antikink_operator(-2.0 / kPi, L, 0.02));
  const auto s = essential_edge_scan(fam);
  EXPECT_TRUE(s.stabilized);
  for (std::size_t c : s.counts_below) EXPECT_EQ(c, 1u);
  // Box modes above the continuum edge approach it like 1/L^2.
  const auto& mu2 = s.second_eigenvalues;
  for (std::size_t k = 0; k < mu2.size(); ++k) EXPECT_GT(mu2[k], 1.0);
  const double r1 = (mu2[0] - 1.0) / (mu2[1] - 1.0), r2 = (mu2[1] - 1.0) / (mu2[2] - 1.0);
  EXPECT_GT(r1, 2.5);
  EXPECT_LT(r1, 5.0);
  EXPECT_GT(r2, 2.5);
  EXPECT_LT(r2, 5.0);
  EXPECT_GE(s.infimum_estimate, 1.0);
  EXPECT_LE(s.infimum_estimate, 1.01);
}

TEST(EdgeScan, KinkStabilises) {
  std::vector<AssembledOperator> fam;
  for (double L : {20.0, 40.0, 80.0}) fam.push_back(kink_operator(-6.0 / kPi, kUnit, L, 0.02));
  const auto s = essential_edge_scan(fam);
  EXPECT_TRUE(s.stabilized);
  EXPECT_GE(s.infimum_estimate, 1.0);
  EXPECT_LE(s.infimum_estimate, 1.01);
}
