#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sgjunction/dynamics.hpp"

using namespace sgj;

namespace {

const YJunction kUnit({1.0, 1.0, 1.0});

State rest(const std::vector<double>& u) { return {u, std::vector<double>(u.size(), 0.0), 0.0}; }

double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

// Relaxed kink plus eps along the chosen seed direction.
SeededRun kink_run(double Z, double L, double h, double eps, SeedMode mode,
                   std::uint64_t seed = 12345) {
  EvolveConfig cfg;
  cfg.perturbation_eps = eps;
  cfg.seed_mode = mode;
  cfg.seed = seed;
  return seed_run(solve_kink_shift(Z, kUnit), build_mesh(kUnit, L, h), cfg);
}

GrowthFit measured_rate(const SeededRun& run, double eps, double t_final, double dt) {
  EvolveConfig cfg;
  cfg.dt = dt;
  cfg.t_final = t_final;
  cfg.record_every = 4;
  cfg.formulation = run.system.formulation();
  const auto rec = evolve(run.system, run.initial, cfg, run.reference);
  return fit_linear_regime(rec, eps);
}

}  // namespace

TEST(Acceleration, ZeroStateIsAtRest) {
  const Mesh m = build_mesh(kUnit, 10.0, 0.05);
  const SineGordonSystem sys(assemble_free(m, -1.3), Formulation::Full);
  EXPECT_EQ(max_abs(sys.acceleration(std::vector<double>(m.dof_count(), 0.0))), 0.0);
}

TEST(Acceleration, ZeroPerturbationIsAtRest) {
  const Mesh m = build_mesh(kUnit, 20.0, 0.05);
  const Profile p = solve_antikink_shift(-0.4);
  const SineGordonSystem sys(assemble_free(m, -0.4), Formulation::PerturbationAboutAntiKink,
                             sample_profile(p, m));
  EXPECT_EQ(max_abs(sys.acceleration(std::vector<double>(m.dof_count(), 0.0))), 0.0);
}

TEST(Acceleration, ExactKinkIsStationaryAwayFromVertex) {
  std::vector<double> worst;
  for (double h : {0.04, 0.02, 0.01}) {
    const Mesh m = build_mesh(kUnit, 30.0, h);
    const SineGordonSystem sys(assemble_free(m, -2.5), Formulation::Full);
    const auto a = sys.acceleration(to_dofs(sample_profile(solve_kink_shift(-2.5, kUnit), m)));
    double w = 0.0;
    for (std::size_t j = 0; j < kEdges; ++j)
      for (std::size_t i = 1; i < m.nodes[j]; ++i) w = std::max(w, std::abs(a[m.dof(j, i)]));
    worst.push_back(w);
  }
  for (std::size_t k = 1; k < worst.size(); ++k)
    EXPECT_GE(std::log2(worst[k - 1] / worst[k]), 1.9);
  EXPECT_LE(worst.back(), 1e-4);
}

TEST(Acceleration, AntiKinkBackgroundMatchesFullFormulation) {
  // The perturbation form at p is the full form at p + phi minus the full
  // form at phi.
  const Mesh m = build_mesh(kUnit, 20.0, 0.02);
  const GraphField bg = sample_profile(solve_antikink_shift(-0.7), m);
  const auto op0 = assemble_free(m, -0.7);
  const SineGordonSystem pert(op0, Formulation::PerturbationAboutAntiKink, bg);
  const SineGordonSystem full(op0, Formulation::Full);
  std::vector<double> p(m.dof_count());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = 1e-3 * std::sin(0.1 * i);
  const auto phi = to_dofs(bg);
  std::vector<double> u(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) u[i] = p[i] + phi[i];
  const auto ap = pert.acceleration(p), af = full.acceleration(u), a0 = full.acceleration(phi);
  double worst = 0.0;
  for (std::size_t j = 0; j < kEdges; ++j)
    for (std::size_t i = 1; i + 1 < m.nodes[j]; ++i) {
      const std::size_t g = m.dof(j, i);
      if (j == 0) continue;  // edge 1 carries the nonzero far value of phi
      worst = std::max(worst, std::abs(ap[g] - (af[g] - a0[g])));
    }
  EXPECT_LE(worst, 1e-9);
}

TEST(Construction, Errors) {
  const Mesh m = build_mesh(kUnit, 10.0, 0.05);
  const auto op0 = assemble_free(m, -1.0);
  const GraphField bg = sample_profile(solve_antikink_shift(-0.5), m);
  EXPECT_THROW(SineGordonSystem(op0, Formulation::PerturbationAboutAntiKink), ConfigError);
  EXPECT_THROW(SineGordonSystem(op0, Formulation::Full, bg), ConfigError);
  EXPECT_THROW(SineGordonSystem(assemble_linearized(m, solve_kink_shift(-1.0, kUnit)),
                                Formulation::Full),
               ConfigError);
  const GraphField other(build_mesh(kUnit, 10.0, 0.1));
  EXPECT_THROW(SineGordonSystem(op0, Formulation::PerturbationAboutAntiKink, other), ConfigError);
}

TEST(Leapfrog, CflLimit) {
  const Mesh m = build_mesh(YJunction({1.0, 2.0, 3.0}), 10.0, 0.05);
  const SineGordonSystem sys(assemble_free(m, 0.0), Formulation::Full);
  EXPECT_DOUBLE_EQ(sys.cfl_limit(), 0.5 * 0.05 / 3.0);
  State s = rest(std::vector<double>(m.dof_count(), 0.0));
  EXPECT_THROW(sys.step(s, 0.01), ConfigError);
  EXPECT_THROW(sys.step(s, -0.01), ConfigError);
  EXPECT_NO_THROW(sys.step(s, 0.008));
  EvolveConfig cfg;
  cfg.dt = 0.01;
  EXPECT_THROW(evolve(sys, s, cfg), ConfigError);
}

TEST(Leapfrog, Reversible) {
  const Mesh m = build_mesh(kUnit, 20.0, 0.02);
  const SineGordonSystem sys(assemble_free(m, -1.0), Formulation::Full);
  State s{random_symmetric_direction(m, 3), random_symmetric_direction(m, 4), 0.0};
  const State s0 = s;
  for (int n = 0; n < 1000; ++n) sys.step(s, 1e-3);
  for (int n = 0; n < 1000; ++n) sys.step(s, -1e-3);
  double d = 0.0;
  for (std::size_t i = 0; i < s.u.size(); ++i)
    d = std::max({d, std::abs(s.u[i] - s0.u[i]), std::abs(s.v[i] - s0.v[i])});
  EXPECT_LE(d, 1e-12);
  EXPECT_NEAR(s.t, 0.0, 1e-15);
}

TEST(Energy, ZeroState) {
  const Mesh m = build_mesh(kUnit, 10.0, 0.05);
  const SineGordonSystem sys(assemble_free(m, -1.0), Formulation::Full);
  EXPECT_EQ(energy(rest(std::vector<double>(m.dof_count(), 0.0)), sys), 0.0);
}

TEST(Energy, DriftIsSecondOrderInTimeStep) {
  const double h = 0.02;
  const Mesh m = build_mesh(kUnit, 20.0, h);
  const SineGordonSystem sys(assemble_free(m, -1.0), Formulation::Full);
  const auto dir = random_symmetric_direction(m, 8);
  std::vector<double> drift;
  for (double dt : {h / 2, h / 4, h / 8}) {
    State s = rest(dir);
    const double e0 = sys.energy(s);
    double worst = 0.0;
    const int steps = static_cast<int>(std::llround(5.0 / dt));
    for (int n = 0; n < steps; ++n) {
      sys.step(s, dt);
      worst = std::max(worst, std::abs(sys.energy(s) - e0) / std::abs(e0));
    }
    drift.push_back(worst);
  }
  for (std::size_t k = 1; k < drift.size(); ++k)
    EXPECT_NEAR(std::log2(drift[k - 1] / drift[k]), 2.0, 0.2);
}

// Round-off excites the unstable mode at rate sqrt(-mu_1), so the horizon
// over which the equilibrium survives depends on the coupling.
TEST(Energy, RelaxedKinkConserved) {
  const double h = 0.02;
  const Mesh m = build_mesh(kUnit, 30.0, h);
  for (const auto& [Z, t_final] : {std::pair{-0.1, 50.0}, std::pair{-6.0 / kPi, 25.0}}) {
    const auto op0 = assemble_free(m, Z);
    const SineGordonSystem sys(op0, Formulation::Full);
    const auto u = relax_equilibrium(op0, to_dofs(sample_profile(solve_kink_shift(Z, kUnit), m)));
    EvolveConfig cfg;
    cfg.dt = h / 4;
    cfg.t_final = t_final;
    cfg.record_every = 200;
    const auto rec = evolve(sys, rest(u), cfg, u);
    ASSERT_FALSE(rec.blew_up);
    double worst = 0.0;
    for (double e : rec.energy) worst = std::max(worst, std::abs(e - rec.energy[0]) / rec.energy[0]);
    EXPECT_LE(worst, 1e-8) << "Z=" << Z;
    EXPECT_GT(rec.energy[0], 0.0);
  }
}

TEST(Evolve, ZeroDataStaysZero) {
  const Mesh m = build_mesh(kUnit, 10.0, 0.05);
  const SineGordonSystem sys(assemble_free(m, -1.0), Formulation::Full);
  EvolveConfig cfg;
  cfg.dt = 0.01;
  cfg.t_final = 2.0;
  const auto rec = evolve(sys, rest(std::vector<double>(m.dof_count(), 0.0)), cfg);
  EXPECT_EQ(rec.times.size(), rec.deviation_norm.size());
  EXPECT_EQ(rec.times.size(), rec.energy.size());
  EXPECT_EQ(rec.times.size(), rec.vertex_value.size());
  EXPECT_NEAR(rec.times.back(), 2.0, 1e-12);
  for (std::size_t k = 0; k < rec.times.size(); ++k) {
    EXPECT_EQ(rec.deviation_norm[k], 0.0);
    EXPECT_EQ(rec.energy[k], 0.0);
    EXPECT_EQ(rec.vertex_value[k], 0.0);
  }
}

TEST(Evolve, FlagsBlowUp) {
  const Mesh m = build_mesh(kUnit, 10.0, 0.05);
  const SineGordonSystem sys(assemble_free(m, 0.0), Formulation::Full);
  State s = rest(std::vector<double>(m.dof_count(), 0.0));
  s.v.assign(s.v.size(), 1e10);
  EvolveConfig cfg;
  cfg.dt = 0.01;
  cfg.t_final = 1.0;
  cfg.record_every = 1;
  const auto rec = evolve(sys, s, cfg);
  EXPECT_TRUE(rec.blew_up);
  EXPECT_EQ(rec.times.size(), 1u);
}

TEST(Evolve, ConfigErrors) {
  const Mesh m = build_mesh(kUnit, 10.0, 0.05);
  const SineGordonSystem sys(assemble_free(m, 0.0), Formulation::Full);
  const State s = rest(std::vector<double>(m.dof_count(), 0.0));
  EvolveConfig cfg;
  cfg.dt = -0.01;
  EXPECT_THROW(evolve(sys, s, cfg), ConfigError);
  cfg = {};
  cfg.record_every = 0;
  EXPECT_THROW(evolve(sys, s, cfg), ConfigError);
  cfg = {};
  cfg.formulation = Formulation::PerturbationAboutAntiKink;
  EXPECT_THROW(evolve(sys, s, cfg), ConfigError);
}

TEST(Evolve, SampledKinkDefectIsSecondOrder) {
  // Z = -0.1 has a slow unstable mode, so the sampling defect stays small
  // over t in [0, 10].
  std::vector<double> worst;
  for (double h : {0.04, 0.02}) {
    const Mesh m = build_mesh(kUnit, 30.0, h);
    const SineGordonSystem sys(assemble_free(m, -0.1), Formulation::Full);
    const auto u = to_dofs(sample_profile(solve_kink_shift(-0.1, kUnit), m));
    EvolveConfig cfg;
    cfg.dt = h / 4;
    cfg.t_final = 10.0;
    cfg.record_every = 40;
    const auto rec = evolve(sys, rest(u), cfg, u);
    worst.push_back(*std::max_element(rec.deviation_norm.begin(), rec.deviation_norm.end()));
  }
  EXPECT_GE(std::log2(worst[0] / worst[1]), 1.8);
  EXPECT_LE(worst[1], 1e-3);
}

TEST(Evolve, VertexFluxResidualIsFirstOrder) {
  std::vector<double> worst;
  for (double h : {0.04, 0.02}) {
    const auto run = kink_run(-2.5, 30.0, h, 1e-3, SeedMode::RandomSymmetric);
    const Mesh& m = run.system.op().mesh;
    State s = run.initial;
    double w = 0.0;
    const double dt = h / 4;
    for (int n = 0; n < static_cast<int>(2.0 / dt); ++n) {
      run.system.step(s, dt);
      w = std::max(w, vertex_residuals(from_dofs(m, s.u), -2.5).flux);
    }
    worst.push_back(w);
  }
  EXPECT_GE(std::log2(worst[0] / worst[1]), 0.8);
}

TEST(GrowthRate, SyntheticExponential) {
  EvolutionRecord rec;
  for (int k = 0; k <= 200; ++k) {
    const double t = 0.1 * k;
    rec.times.push_back(t);
    rec.deviation_norm.push_back(1e-6 * std::exp(0.3 * t));
  }
  const auto f = growth_rate(rec, 2.0, 18.0);
  EXPECT_NEAR(f.s, 0.3, 1e-6);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  EXPECT_TRUE(f.valid);
  EXPECT_THROW(growth_rate(rec, 50.0, 60.0), NumericalError);
  EXPECT_FALSE(growth_rate(rec, 2.0, 4.0).valid);  // under three e-foldings
}

TEST(GrowthRate, LinearWindowBounds) {
  EvolutionRecord rec;
  for (int k = 0; k <= 400; ++k) {
    rec.times.push_back(0.1 * k);
    rec.deviation_norm.push_back(1e-6 * std::exp(0.5 * 0.1 * k));
  }
  const auto [lo, hi] = linear_window(rec, 1e-5);
  EXPECT_NEAR(lo, std::log(10.0) / 0.5, 0.1);
  EXPECT_NEAR(hi, std::log(1e4) / 0.5, 0.1);
  EXPECT_THROW(linear_window(rec, 1e10), NumericalError);
  const auto f = fit_linear_regime(rec, 1e-6);
  EXPECT_TRUE(f.valid);
  EXPECT_NEAR(f.s, 0.5, 1e-9);
}

TEST(Growth, MatchesSpectralPrediction) {
  const double h = 0.02, eps = 1e-6;
  const auto run = kink_run(-6.0 / kPi, 40.0, h, eps, SeedMode::GroundEigenvector);
  ASSERT_LT(run.mu1, 0.0);
  const auto f = measured_rate(run, eps, 25.0, 0.4 * h);
  EXPECT_TRUE(f.valid);
  EXPECT_GE(f.r_squared, 0.999);
  EXPECT_GE(f.s * (f.t_hi - f.t_lo), 3.0);
  EXPECT_LE(std::abs(f.s - std::sqrt(-run.mu1)) / std::sqrt(-run.mu1), 0.05);
}

TEST(Growth, IndependentOfAmplitude) {
  const double h = 0.02;
  const auto a = measured_rate(kink_run(-2.5, 40.0, h, 1e-6, SeedMode::GroundEigenvector), 1e-6,
                               30.0, 0.4 * h);
  const auto b = measured_rate(kink_run(-2.5, 40.0, h, 1e-7, SeedMode::GroundEigenvector), 1e-7,
                               30.0, 0.4 * h);
  ASSERT_TRUE(a.valid);
  ASSERT_TRUE(b.valid);
  EXPECT_LE(std::abs(a.s - b.s) / a.s, 5e-3);
}

TEST(Growth, IndependentOfSeed) {
  const double h = 0.02, eps = 1e-6;
  const auto g = measured_rate(kink_run(-6.0 / kPi, 40.0, h, eps, SeedMode::GroundEigenvector),
                               eps, 25.0, 0.4 * h);
  for (std::uint64_t seed : {1u, 2u}) {
    const auto r = measured_rate(kink_run(-6.0 / kPi, 40.0, h, eps, SeedMode::RandomSymmetric, seed),
                                 eps, 25.0, 0.4 * h);
    EXPECT_TRUE(r.valid) << "seed " << seed;
    EXPECT_LE(std::abs(r.s - g.s) / g.s, 0.02) << "seed " << seed;
  }
}

TEST(Growth, AntiKinkMatchesSpectralPrediction) {
  const double h = 0.02, eps = 1e-6;
  EvolveConfig cfg;
  cfg.formulation = Formulation::PerturbationAboutAntiKink;
  cfg.perturbation_eps = eps;
  const auto run = seed_run(solve_antikink_shift(-2.0 / kPi), build_mesh(kUnit, 50.0, h), cfg);
  EXPECT_EQ(max_abs(run.reference), 0.0);
  const double s = std::sqrt(-run.mu1);
  const auto f = measured_rate(run, eps, 0.8 * 50.0, 0.4 * h);
  EXPECT_TRUE(f.valid);
  EXPECT_LE(std::abs(f.s - s) / s, 0.05);
}

TEST(Growth, SeedRunRejectsWrongFormulation) {
  EvolveConfig cfg;
  cfg.formulation = Formulation::Full;
  EXPECT_THROW(seed_run(solve_antikink_shift(-0.5), build_mesh(kUnit, 20.0, 0.05), cfg),
               ConfigError);
}

// A stable mode of the anti-kink (small |mu_1| keeps the unstable
// contamination negligible) oscillates at sqrt(mu_2).
TEST(HarmonicLimit, StableModeFrequency) {
  const double h = 0.02, eps = 1e-6, dt = 0.4 * h;
  EvolveConfig cfg;
  cfg.formulation = Formulation::PerturbationAboutAntiKink;
  cfg.perturbation_eps = eps;
  cfg.seed_mode = SeedMode::SecondEigenvector;
  const Mesh m = build_mesh(kUnit, 40.0, h);
  const auto run = seed_run(solve_antikink_shift(-0.95), m, cfg);
  ASSERT_GT(run.mu2, 0.0);
  const auto& w = run.system.op().lumped_mass;
  const std::vector<double> mode = run.initial.u;
  auto amplitude = [&](const State& s) {
    double a = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i) a += w[i] * s.u[i] * mode[i];
    return a;
  };
  State s = run.initial;
  std::vector<double> crossings;
  double prev = amplitude(s), t_prev = 0.0;
  while (s.t < 35.0) {
    run.system.step(s, dt);
    const double a = amplitude(s);
    if ((prev > 0.0) != (a > 0.0)) crossings.push_back(t_prev + dt * prev / (prev - a));
    prev = a;
    t_prev = s.t;
  }
  ASSERT_GE(crossings.size(), 6u);
  const double half_period =
      (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
  const double omega = kPi / half_period;
  EXPECT_LE(std::abs(omega - std::sqrt(run.mu2)) / std::sqrt(run.mu2), 0.01);
}

TEST(RandomDirection, SymmetricAndDeterministic) {
  const Mesh m = build_mesh(kUnit, 10.0, 0.05);
  const auto a = random_symmetric_direction(m, 42), b = random_symmetric_direction(m, 42);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, random_symmetric_direction(m, 43));
  for (std::size_t i = 1; i < m.nodes[1]; ++i) EXPECT_EQ(a[m.dof(1, i)], a[m.dof(2, i)]);
}

TEST(RelaxEquilibrium, ConvergesToDiscreteKink) {
  const Mesh m = build_mesh(kUnit, 30.0, 0.04);
  const auto op0 = assemble_free(m, -2.5);
  const auto u0 = to_dofs(sample_profile(solve_kink_shift(-2.5, kUnit), m));
  const auto u = relax_equilibrium(op0, u0);
  const SineGordonSystem sys(op0, Formulation::Full);
  EXPECT_LE(max_abs(sys.acceleration(u)), 1e-10);
  double shift = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) shift = std::max(shift, std::abs(u[i] - u0[i]));
  EXPECT_LE(shift, 1e-2);
}
