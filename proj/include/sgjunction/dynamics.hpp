#pragma once

// Explicit symplectic time stepping of the sine-Gordon system on the meshed
// junction. Lumped mass makes the kick a diagonal solve; the delta coupling
// acts through the vertex row of the stiffness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sgjunction/operators.hpp"
#include "sgjunction/spectra.hpp"
#include "sgjunction/tree_matrix.hpp"

namespace sgj {

enum class Formulation { Full, PerturbationAboutAntiKink };
enum class SeedMode { GroundEigenvector, SecondEigenvector, RandomSymmetric };

inline const char* to_string(Formulation f) {
  return f == Formulation::Full ? "full" : "perturbation";
}
inline const char* to_string(SeedMode m) {
  switch (m) {
    case SeedMode::GroundEigenvector: return "ground";
    case SeedMode::SecondEigenvector: return "second";
    case SeedMode::RandomSymmetric: return "random";
  }
  return "?";
}

// Displacement (or perturbation p) and velocity on the unknowns; far ends are
// held fixed.
struct State {
  std::vector<double> u;
  std::vector<double> v;
  double t = 0.0;
};

class SineGordonSystem {
 public:
  // op0 must be the free assembly; background is required exactly for the
  // perturbation formulation.
  SineGordonSystem(AssembledOperator op0, Formulation f,
                   std::optional<GraphField> background = std::nullopt)
      : op_(std::move(op0)), formulation_(f) {
    if (!op_.potential.empty())
      throw ConfigError("dynamics needs the free assembly without potential");
    const bool needs = f == Formulation::PerturbationAboutAntiKink;
    if (needs != background.has_value())
      throw ConfigError(needs ? "perturbation formulation needs a background"
                              : "full formulation takes no background");
    if (background) {
      if (!(background->mesh == op_.mesh))
        throw ConfigError("background sampled on another mesh");
      const auto phi = to_dofs(*background);
      sin_bg_.resize(phi.size());
      cos_bg_.resize(phi.size());
      for (std::size_t i = 0; i < phi.size(); ++i) {
        sin_bg_[i] = std::sin(phi[i]);
        cos_bg_[i] = std::cos(phi[i]);
      }
      background_ = phi;
    }
    const auto& st = op_.mesh.steps;
    cfl_limit_ = 0.5 * std::min({st[0], st[1], st[2]}) / op_.mesh.junction.max_speed();
  }

  const AssembledOperator& op() const { return op_; }
  Formulation formulation() const { return formulation_; }
  double cfl_limit() const { return cfl_limit_; }
  std::size_t size() const { return op_.mesh.dof_count(); }
  const std::vector<double>& background() const { return background_; }

  std::vector<double> acceleration(const std::vector<double>& u) const {
    if (u.size() != size()) throw std::invalid_argument("state size mismatch");
    auto a = op_.stiffness.apply_differences(u);
    const auto& w = op_.lumped_mass;
    if (formulation_ == Formulation::Full) {
      for (std::size_t i = 0; i < a.size(); ++i) a[i] = -a[i] / w[i] - std::sin(u[i]);
    } else {
      for (std::size_t i = 0; i < a.size(); ++i)
        a[i] = -a[i] / w[i] + sin_bg_[i] - std::sin(u[i] + background_[i]);
    }
    return a;
  }

  double energy(const State& s) const {
    const auto& w = op_.lumped_mass;
    double e = 0.5 * op_.stiffness.quadratic(s.u);
    for (std::size_t i = 0; i < s.u.size(); ++i) {
      double pot;
      if (formulation_ == Formulation::Full)
        pot = 1.0 - std::cos(s.u[i]);
      else
        pot = cos_bg_[i] - std::cos(s.u[i] + background_[i]) - s.u[i] * sin_bg_[i];
      e += w[i] * (0.5 * s.v[i] * s.v[i] + pot);
    }
    return e;
  }

  // Kick-drift-kick; a negative dt runs the scheme backwards.
  void step(State& s, double dt) const {
    if (std::abs(dt) > cfl_limit_ * (1.0 + 1e-12))
      throw ConfigError("time step " + std::to_string(std::abs(dt)) +
                        " violates the CFL limit " + std::to_string(cfl_limit_));
    auto a = acceleration(s.u);
    for (std::size_t i = 0; i < s.u.size(); ++i) {
      s.v[i] += 0.5 * dt * a[i];
      s.u[i] += dt * s.v[i];
    }
    a = acceleration(s.u);
    for (std::size_t i = 0; i < s.u.size(); ++i) s.v[i] += 0.5 * dt * a[i];
    s.t += dt;
  }

 private:
  AssembledOperator op_;
  Formulation formulation_;
  std::vector<double> background_, sin_bg_, cos_bg_;
  double cfl_limit_ = 0.0;
};

inline State step_leapfrog(State s, double dt, const SineGordonSystem& sys) {
  sys.step(s, dt);
  return s;
}

inline double energy(const State& s, const SineGordonSystem& sys) {
  return sys.energy(s);
}

struct EvolveConfig {
  double dt = 0.0025;
  double t_final = 30.0;
  int record_every = 10;
  Formulation formulation = Formulation::Full;
  double perturbation_eps = 1e-6;
  SeedMode seed_mode = SeedMode::GroundEigenvector;
  std::uint64_t seed = 12345;
};

struct EvolutionRecord {
  std::vector<double> times;
  std::vector<double> deviation_norm;
  std::vector<double> energy;
  std::vector<double> vertex_value;
  bool blew_up = false;
};

// sqrt((u - ref)^T M_L (u - ref) + v^T M_L v)
inline double deviation_norm(const State& s, const std::vector<double>& ref,
                             const std::vector<double>& lumped) {
  double d = 0.0;
  for (std::size_t i = 0; i < s.u.size(); ++i) {
    const double du = s.u[i] - (ref.empty() ? 0.0 : ref[i]);
    d += lumped[i] * (du * du + s.v[i] * s.v[i]);
  }
  return std::sqrt(d);
}

// Runs to cfg.t_final; the deviation is measured against `reference` (empty
// means zero, the natural choice for the perturbation formulation).
inline EvolutionRecord evolve(const SineGordonSystem& sys, State state,
                              const EvolveConfig& cfg,
                              const std::vector<double>& reference = {}) {
  if (!(cfg.dt > 0.0) || !(cfg.t_final >= 0.0) || cfg.record_every < 1)
    throw ConfigError("evolve needs dt > 0, t_final >= 0, record_every >= 1");
  if (cfg.formulation != sys.formulation())
    throw ConfigError("configuration and system disagree on the formulation");
  if (cfg.dt > sys.cfl_limit() * (1.0 + 1e-12))
    throw ConfigError("time step " + std::to_string(cfg.dt) +
                      " violates the CFL limit " + std::to_string(sys.cfl_limit()));
  EvolutionRecord rec;
  const auto& w = sys.op().lumped_mass;
  auto record = [&] {
    rec.times.push_back(state.t);
    rec.deviation_norm.push_back(deviation_norm(state, reference, w));
    rec.energy.push_back(sys.energy(state));
    rec.vertex_value.push_back(state.u[Mesh::vertex_dof]);
  };
  const auto steps = static_cast<long long>(std::llround(cfg.t_final / cfg.dt));
  const double t0 = state.t;
  record();
  for (long long n = 1; n <= steps; ++n) {
    sys.step(state, cfg.dt);
    state.t = t0 + static_cast<double>(n) * cfg.dt;
    if (n % cfg.record_every == 0 || n == steps) {
      const bool finite = std::all_of(state.u.begin(), state.u.end(), [](double x) {
        return std::isfinite(x) && std::abs(x) <= 1e6;
      });
      if (!finite) {
        rec.blew_up = true;
        break;
      }
      record();
    }
  }
  return rec;
}

struct GrowthFit {
  double s = 0.0;
  double r_squared = 0.0;
  double t_lo = 0.0, t_hi = 0.0;
  std::size_t samples = 0;
  bool valid = false;  // r^2 >= 0.999 over at least three e-foldings
};

// Least-squares slope of log(deviation) on [t_lo, t_hi].
inline GrowthFit growth_rate(const EvolutionRecord& rec, double t_lo, double t_hi) {
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    const double t = rec.times[i];
    if (t < t_lo || t > t_hi || !(rec.deviation_norm[i] > 0.0)) continue;
    const double y = std::log(rec.deviation_norm[i]);
    n += 1;
    sx += t;
    sy += y;
    sxx += t * t;
    sxy += t * y;
    syy += y * y;
  }
  if (n < 3) throw NumericalError("growth fit needs at least three samples in the window");
  GrowthFit f;
  f.t_lo = t_lo;
  f.t_hi = t_hi;
  f.samples = static_cast<std::size_t>(n);
  const double vx = sxx - sx * sx / n, vy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
  f.s = cxy / vx;
  f.r_squared = vy > 0.0 ? cxy * cxy / (vx * vy) : 1.0;
  f.valid = f.r_squared >= 0.999 && f.s * (t_hi - t_lo) >= 3.0;
  return f;
}

// Window where the deviation runs from lower to upper, taken from the first
// crossing of `lower` to the first crossing of `upper` (or the end of record).
inline std::pair<double, double> linear_window(const EvolutionRecord& rec,
                                               double lower, double upper = 1e-2) {
  std::optional<double> lo;
  double hi = rec.times.empty() ? 0.0 : rec.times.back();
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    const double d = rec.deviation_norm[i];
    if (!lo && d >= lower) lo = rec.times[i];
    if (d > upper) {
      hi = rec.times[i > 0 ? i - 1 : 0];
      break;
    }
  }
  if (!lo) throw NumericalError("deviation never reached the lower window bound");
  return {*lo, hi};
}

// Fit over the linear regime [10 eps, 1e-2], trimming the upper end while the
// fit quality stays below threshold.
inline GrowthFit fit_linear_regime(const EvolutionRecord& rec, double eps,
                                   double upper = 1e-2) {
  auto [lo, hi] = linear_window(rec, 10.0 * eps, upper);
  GrowthFit f = growth_rate(rec, lo, hi);
  while (!f.valid && f.r_squared < 0.999) {
    const double shrunk = hi - 0.1 * (hi - lo);
    if (f.s * (shrunk - lo) < 3.0) break;
    hi = shrunk;
    f = growth_rate(rec, lo, hi);
  }
  return f;
}

// Newton iteration for K0 u + M_L sin u = 0 starting from u0; stops when the
// update falls below tol (max norm).
inline std::vector<double> relax_equilibrium(const AssembledOperator& op0,
                                             std::vector<double> u,
                                             double tol = 1e-13,
                                             int max_iterations = 30) {
  const auto& w = op0.lumped_mass;
  for (int it = 0; it < max_iterations; ++it) {
    auto F = op0.stiffness.apply(u);
    for (std::size_t i = 0; i < u.size(); ++i) F[i] += w[i] * std::sin(u[i]);
    TreeMatrix Jm = op0.stiffness;
    Jm.vertex_diag += w[0] * std::cos(u[0]);
    for (std::size_t j = 0; j < kEdges; ++j)
      for (std::size_t i = 1; i < op0.mesh.nodes[j]; ++i) {
        const std::size_t g = op0.mesh.dof(j, i);
        Jm.diag[j][i - 1] += w[g] * std::cos(u[g]);
      }
    const auto du = TreeFactorization(Jm).solve(F);
    double step = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] -= du[i];
      step = std::max(step, std::abs(du[i]));
    }
    if (step <= tol) return u;
  }
  throw NumericalError("equilibrium relaxation did not converge");
}

// Smooth random direction: Gaussian envelope times a random quadratic on each
// edge, a shared vertex value, and edges 2 and 3 mirrored.
inline std::vector<double> random_symmetric_direction(const Mesh& mesh,
                                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double r0 = 1.0 + std::abs(normal(rng));
  std::array<std::array<double, 2>, kEdges> coef{};
  for (std::size_t j = 0; j < 2; ++j) coef[j] = {normal(rng), normal(rng)};
  coef[2] = coef[1];
  std::vector<double> d(mesh.dof_count());
  d[Mesh::vertex_dof] = r0;
  for (std::size_t j = 0; j < kEdges; ++j)
    for (std::size_t i = 1; i < mesh.nodes[j]; ++i) {
      const double s = mesh.s(j, i), q = s / 4.0;
      d[mesh.dof(j, i)] = std::exp(-s * s / 4.0) * (r0 + coef[j][0] * q + coef[j][1] * q * q);
    }
  return d;
}

struct SeededRun {
  SineGordonSystem system;
  State initial;
  std::vector<double> reference;  // equilibrium the deviation is measured from
  double mu1 = 0.0;               // lowest eigenvalue of the lumped pencil
  double mu2 = 0.0;
};

// Equilibrium plus eps times a direction normalised in the lumped L^2 norm.
// Kinks are relaxed to the discrete equilibrium first so the perturbation is
// not swamped by the O(h^2) sampling defect; the perturbation formulation
// about the anti-kink has p = 0 as an exact discrete equilibrium.
inline SeededRun seed_run(const Profile& profile, const Mesh& mesh,
                          const EvolveConfig& cfg, AssemblyOptions opt = {}) {
  const double Z = coupling_of(profile);
  auto op0 = assemble_free(mesh, Z, opt);
  const bool ak = is_antikink(profile);
  const GraphField sampled = sample_profile(profile, mesh);
  std::vector<double> reference;
  GraphField equilibrium = sampled;
  std::optional<GraphField> background;
  if (ak) {
    background = sampled;
    reference.assign(mesh.dof_count(), 0.0);
  } else {
    reference = relax_equilibrium(op0, to_dofs(sampled));
    std::array<double, kEdges> far{};
    for (std::size_t j = 0; j < kEdges; ++j) far[j] = sampled.far_end(j);
    equilibrium = from_dofs(mesh, reference, far);
  }
  const Formulation f = ak ? Formulation::PerturbationAboutAntiKink : Formulation::Full;
  if (cfg.formulation != f)
    throw ConfigError(std::string("profile family requires the ") + to_string(f) +
                      " formulation");
  SineGordonSystem sys(op0, f, background);

  EigenOptions eo;
  eo.mass = MassKind::Lumped;
  const auto lin = assemble_linearized(mesh, Z, equilibrium,
                                       ak ? PotentialKind::AntiKink : PotentialKind::Kink, opt);
  const auto pairs = lowest_eigenpairs(lin, 2, eo);

  std::vector<double> dir;
  switch (cfg.seed_mode) {
    case SeedMode::GroundEigenvector: dir = pairs[0].vector; break;
    case SeedMode::SecondEigenvector: dir = pairs[1].vector; break;
    case SeedMode::RandomSymmetric: dir = random_symmetric_direction(mesh, cfg.seed); break;
  }
  double nrm = 0.0;
  for (std::size_t i = 0; i < dir.size(); ++i) nrm += op0.lumped_mass[i] * dir[i] * dir[i];
  nrm = std::sqrt(nrm);
  State s;
  s.u = reference;
  for (std::size_t i = 0; i < dir.size(); ++i) s.u[i] += cfg.perturbation_eps * dir[i] / nrm;
  s.v.assign(dir.size(), 0.0);
  return {std::move(sys), std::move(s), std::move(reference), pairs[0].mu, pairs[1].mu};
}

}  // namespace sgj
