#pragma once

// Spectral analysis of assembled pencils (K, M): exact inertia counts from the
// tree LDL^T, eigenvalues by inertia bisection, eigenvectors by shifted inverse
// iteration, and an independent shooting oracle for the ground state that
// never touches the element discretisation.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sgjunction/operators.hpp"
#include "sgjunction/profiles.hpp"
#include "sgjunction/tree_matrix.hpp"

namespace sgj {

enum class MassKind { Consistent, Lumped };

inline TreeMatrix shifted(const AssembledOperator& op, double sigma,
                          MassKind kind) {
  return kind == MassKind::Consistent
             ? combine(1.0, op.stiffness, -sigma, op.mass)
             : combine(1.0, op.stiffness, -sigma, op.lumped_mass_matrix());
}

// Number of eigenvalues of K v = mu M v strictly below sigma.
inline std::size_t inertia(const AssembledOperator& op, double sigma,
                           MassKind kind = MassKind::Consistent) {
  return TreeFactorization(shifted(op, sigma, kind)).negative_count();
}

namespace detail {
// Inertia at sigma, nudging the shift off an eigenvalue if a pivot vanishes.
inline std::size_t inertia_nudged(const AssembledOperator& op, double sigma,
                                  MassKind kind) {
  double delta = 1e-13 * std::max(1.0, std::abs(sigma));
  for (int attempt = 0; attempt < 8; ++attempt) {
    try {
      return inertia(op, sigma, kind);
    } catch (const ZeroPivotError&) {
      sigma += delta;
      delta *= 4.0;
    }
  }
  throw NumericalError("could not move shift off the spectrum");
}

inline std::vector<double> mass_apply(const AssembledOperator& op,
                                      std::span<const double> v, MassKind kind) {
  if (kind == MassKind::Consistent) return op.mass.apply(v);
  std::vector<double> y(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) y[i] = op.lumped_mass[i] * v[i];
  return y;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
}  // namespace detail

struct Eigenpair {
  double mu = 0.0;
  std::vector<double> vector;  // unknowns, M-normalised, vertex value >= 0
  double residual = 0.0;       // ||K v - mu M v|| / ||M v||
};

inline GraphField eigen_field(const Mesh& mesh, const Eigenpair& e) {
  return from_dofs(mesh, e.vector);
}

struct EigenOptions {
  MassKind mass = MassKind::Consistent;
  double bracket_width = 1e-10;
  double residual_tol = 1e-8;
  int max_iterations = 200;
};

// Bracket of the (index+1)-th smallest eigenvalue by inertia bisection.
inline std::pair<double, double> bracket_eigenvalue(const AssembledOperator& op,
                                                    std::size_t index,
                                                    const EigenOptions& opt = {}) {
  using detail::inertia_nudged;
  double lo = -1.0;
  while (inertia_nudged(op, lo, opt.mass) > index) lo *= 2.0;
  double hi = 1.0;
  while (inertia_nudged(op, hi, opt.mass) < index + 1) hi = 2.0 * hi + 1.0;
  while (hi - lo > opt.bracket_width) {
    const double mid = 0.5 * (lo + hi);
    (inertia_nudged(op, mid, opt.mass) > index ? hi : lo) = mid;
  }
  return {lo, hi};
}

inline std::vector<Eigenpair> lowest_eigenpairs(const AssembledOperator& op,
                                                std::size_t k,
                                                const EigenOptions& opt = {}) {
  if (k < 1) throw ConfigError("lowest_eigenpairs needs k >= 1");
  const std::size_t n = op.mesh.dof_count();
  std::vector<Eigenpair> out;
  for (std::size_t idx = 0; idx < k; ++idx) {
    const auto [lo, hi] = bracket_eigenvalue(op, idx, opt);
    double sigma = 0.5 * (lo + hi);
    std::optional<TreeFactorization> fac;
    for (int attempt = 0; attempt < 8 && !fac; ++attempt) {
      try {
        fac.emplace(shifted(op, sigma, opt.mass));
      } catch (const ZeroPivotError&) {
        sigma += 0.25 * (hi - lo) + 1e-14;
      }
    }
    if (!fac) throw NumericalError("inverse iteration: singular shift");

    // Deterministic start vector with content on every edge.
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
      v[i] = 1.0 + 0.5 * std::sin(0.7 * static_cast<double>(i) + 0.3 * idx);
    Eigenpair e;
    bool converged = false;
    for (int it = 0; it < opt.max_iterations; ++it) {
      auto Mv = detail::mass_apply(op, v, opt.mass);
      auto w = fac->solve(Mv);
      // Deflate previously found directions (matters for multiple eigenvalues).
      for (const auto& prev : out) {
        const auto Mp = detail::mass_apply(op, prev.vector, opt.mass);
        const double proj = detail::dot(w, Mp);
        for (std::size_t i = 0; i < n; ++i) w[i] -= proj * prev.vector[i];
      }
      const auto Mw = detail::mass_apply(op, w, opt.mass);
      const double nrm = std::sqrt(detail::dot(w, Mw));
      for (double& x : w) x /= nrm;
      v = std::move(w);
      Mv = detail::mass_apply(op, v, opt.mass);
      const auto Kv = op.stiffness.apply(v);
      const double mu = detail::dot(v, Kv);  // v is M-normalised
      double r2 = 0.0, m2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = Kv[i] - mu * Mv[i];
        r2 += r * r;
        m2 += Mv[i] * Mv[i];
      }
      e.mu = mu;
      e.residual = std::sqrt(r2 / m2);
      if (e.residual <= opt.residual_tol) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw NumericalError("inverse iteration did not converge for eigenvalue #" +
                           std::to_string(idx + 1));
    double pivot = v[0];
    if (std::abs(pivot) < 1e-12) pivot = v[1];
    if (pivot < 0.0)
      for (double& x : v) x = -x;
    e.vector = std::move(v);
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shooting oracle.

struct ShootingProblem {
  YJunction junction;
  double Z = 0.0;
  // V_j(s) in the outward coordinate.
  std::array<std::function<double(double)>, kEdges> potential;
  double far_potential = 0.0;  // V_j at s = length (all edges)
  double min_potential = 0.0;
  double length = 40.0;
  double step = 0.0025;
};

inline ShootingProblem shooting_problem(const Profile& p, double length,
                                        double step) {
  ShootingProblem sp;
  sp.junction = junction_of(p);
  sp.Z = coupling_of(p);
  for (std::size_t j = 0; j < kEdges; ++j)
    sp.potential[j] = [p, j](double s) { return std::cos(eval_outward(p, j, s).phi); };
  sp.far_potential = 1.0;
  sp.min_potential = -1.0;
  sp.length = length;
  sp.step = step;
  return sp;
}

inline ShootingProblem shooting_problem_constant(double Z,
                                                 const YJunction& junction,
                                                 double V, double length,
                                                 double step) {
  ShootingProblem sp;
  sp.junction = junction;
  sp.Z = Z;
  for (auto& f : sp.potential) f = [V](double) { return V; };
  sp.far_potential = V;
  sp.min_potential = V;
  sp.length = length;
  sp.step = step;
  return sp;
}

class ShootingSolver {
 public:
  explicit ShootingSolver(ShootingProblem p) : p_(std::move(p)) {
    steps_ = static_cast<std::size_t>(std::llround(p_.length / p_.step));
    dt_ = p_.length / static_cast<double>(steps_);
    for (std::size_t j = 0; j < kEdges; ++j) {
      auto& V = samples_[j];
      V.resize(2 * steps_ + 1);
      for (std::size_t k = 0; k <= 2 * steps_; ++k)
        V[k] = p_.potential[j](0.5 * dt_ * static_cast<double>(k));
    }
  }

  // (psi(0), psi_s(0)) of the solution decaying at the far end, scaled to unit
  // Euclidean length.
  std::array<double, 2> vertex_data(std::size_t j, double mu) const {
    const double c2 = p_.junction.speeds[j] * p_.junction.speeds[j];
    const double kappa = std::sqrt(std::max(p_.far_potential - mu, 0.0) / c2);
    const auto& V = samples_[j];
    double y0 = 1.0, y1 = -kappa;
    auto rhs = [&](std::size_t k, double a, double b, double& da, double& db) {
      da = b;
      db = (V[k] - mu) * a / c2;
    };
    const double h = -dt_;
    for (std::size_t n = steps_; n > 0; --n) {
      const std::size_t k0 = 2 * n, km = 2 * n - 1, k1 = 2 * n - 2;
      double a1, b1, a2, b2, a3, b3, a4, b4;
      rhs(k0, y0, y1, a1, b1);
      rhs(km, y0 + 0.5 * h * a1, y1 + 0.5 * h * b1, a2, b2);
      rhs(km, y0 + 0.5 * h * a2, y1 + 0.5 * h * b2, a3, b3);
      rhs(k1, y0 + h * a3, y1 + h * b3, a4, b4);
      y0 += h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4);
      y1 += h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4);
      const double nrm = std::abs(y0) + std::abs(y1);
      if (nrm > 1e100) {
        y0 /= nrm;
        y1 /= nrm;
      }
    }
    const double nrm = std::hypot(y0, y1);
    return {y0 / nrm, y1 / nrm};
  }

  // Flux mismatch scaled by prod psi_k(0); continuous in mu, zero exactly at
  // eigenvalues of the coupled problem.
  double secular(double mu) const {
    std::array<std::array<double, 2>, kEdges> d;
    for (std::size_t j = 0; j < kEdges; ++j) d[j] = vertex_data(j, mu);
    const auto& c = p_.junction.speeds;
    double s = -p_.Z * d[0][0] * d[1][0] * d[2][0];
    for (std::size_t j = 0; j < kEdges; ++j) {
      double prod = c[j] * c[j] * d[j][1];
      for (std::size_t k = 0; k < kEdges; ++k)
        if (k != j) prod *= d[k][0];
      s += prod;
    }
    return s;
  }

  // g(mu) = sum_j c_j^2 psi_j'(0) / psi_j(0) - Z with outward derivatives.
  double flux_residual(double mu) const {
    double g = -p_.Z;
    for (std::size_t j = 0; j < kEdges; ++j) {
      const auto d = vertex_data(j, mu);
      const double c = p_.junction.speeds[j];
      g += c * c * d[1] / d[0];
    }
    return g;
  }

  double lower_bound() const {
    const double sc = p_.junction.speed_sum();
    const double beta = p_.Z < 0.0 ? p_.Z * p_.Z / (sc * sc) : 0.0;
    return p_.min_potential - beta - 0.1;
  }

  double ground_state(double tol = 1e-12, std::size_t scan = 64) const {
    const double lo0 = lower_bound();
    const double hi0 = p_.far_potential - 1e-9;
    double prev_mu = lo0, prev = secular(lo0);
    for (std::size_t k = 1; k <= scan; ++k) {
      const double mu = lo0 + (hi0 - lo0) * static_cast<double>(k) / scan;
      const double cur = secular(mu);
      if ((prev < 0.0) != (cur < 0.0) || cur == 0.0) {
        double lo = prev_mu, hi = mu, flo = prev;
        while (hi - lo > tol) {
          const double mid = 0.5 * (lo + hi);
          const double fm = secular(mid);
          if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        return 0.5 * (lo + hi);
      }
      prev_mu = mu;
      prev = cur;
    }
    throw NoBoundStateError("shooting: no bound state found below the far-field "
                            "potential");
  }

  const ShootingProblem& problem() const { return p_; }

 private:
  ShootingProblem p_;
  std::size_t steps_ = 0;
  double dt_ = 0.0;
  std::array<std::vector<double>, kEdges> samples_;
};

inline double shooting_eigenvalue(const ShootingProblem& p) {
  return ShootingSolver(p).ground_state();
}

inline double shooting_eigenvalue(const Profile& profile, double length,
                                  double step) {
  return shooting_eigenvalue(shooting_problem(profile, length, step));
}

// ---------------------------------------------------------------------------

struct SpectralReport {
  double Z = 0.0;
  PotentialKind kind = PotentialKind::Free;
  std::size_t morse_index = 0;
  std::vector<Eigenpair> negative_eigenvalues;
  double lowest_eigenvalue = 0.0;
  double second_eigenvalue = 0.0;
  double kernel_gap = 0.0;
  double essential_edge_estimate = 0.0;
  std::optional<double> oracle_mu0;
  double length = 0.0;
  double spacing = 0.0;
};

inline SpectralReport spectral_report(
    const AssembledOperator& op,
    const std::optional<ShootingProblem>& oracle = std::nullopt,
    const EigenOptions& opt = {}) {
  SpectralReport r;
  r.Z = op.Z;
  r.kind = op.potential_kind;
  r.length = op.mesh.max_length();
  r.spacing = op.mesh.spacing;
  r.morse_index = detail::inertia_nudged(op, 0.0, opt.mass);
  const auto pairs = lowest_eigenpairs(op, std::max<std::size_t>(2, r.morse_index + 1), opt);
  r.negative_eigenvalues.assign(pairs.begin(), pairs.begin() + r.morse_index);
  r.lowest_eigenvalue = pairs[0].mu;
  r.second_eigenvalue = pairs[1].mu;
  r.kernel_gap = std::abs(pairs[r.morse_index].mu);
  if (r.morse_index > 0)
    r.kernel_gap = std::min(r.kernel_gap, std::abs(pairs[r.morse_index - 1].mu));
  const std::size_t below = detail::inertia_nudged(op, op.far_potential, opt.mass);
  r.essential_edge_estimate = bracket_eigenvalue(op, below, opt).second;
  if (oracle) r.oracle_mu0 = shooting_eigenvalue(*oracle);
  return r;
}

struct CertificationFloors {
  double gap_floor = 0.0;  // <= 0 means 10 h^2
  double r0_floor = 0.0;   // <= 0 means 10 h^2
};

struct CertificationResult {
  bool pass = false;
  std::string diagnosis;
  double predicted_growth_rate = 0.0;  // sqrt(-mu_1) on PASS
};

// Hypotheses of the instability criterion: one simple negative eigenvalue,
// a quantitative gap around 0 and the rest of the spectrum bounded away.
inline CertificationResult certify_criterion(const SpectralReport& r,
                                             CertificationFloors f = {}) {
  const double h2 = r.spacing * r.spacing;
  const double gap_floor = f.gap_floor > 0.0 ? f.gap_floor : 10.0 * h2;
  const double r0_floor = f.r0_floor > 0.0 ? f.r0_floor : 10.0 * h2;
  CertificationResult c;
  if (r.morse_index != 1) {
    c.diagnosis = "morse index " + std::to_string(r.morse_index) + " != 1";
    return c;
  }
  if (r.kernel_gap < gap_floor) {
    c.diagnosis = "kernel gap " + std::to_string(r.kernel_gap) + " below floor " +
                  std::to_string(gap_floor);
    return c;
  }
  if (r.second_eigenvalue < r0_floor) {
    c.diagnosis = "second eigenvalue " + std::to_string(r.second_eigenvalue) +
                  " below r0 floor " + std::to_string(r0_floor);
    return c;
  }
  c.pass = true;
  c.predicted_growth_rate = std::sqrt(-r.lowest_eigenvalue);
  c.diagnosis = "ok";
  return c;
}

struct EdgeScan {
  std::vector<std::size_t> counts_below;  // eigenvalues below the threshold
  std::vector<double> second_eigenvalues;
  std::vector<double> edge_estimates;     // lowest eigenvalue >= far potential
  double infimum_estimate = 0.0;
  bool stabilized = false;                // counts equal across the family
};

// Operators for the same coupling on growing truncations.
inline EdgeScan essential_edge_scan(const std::vector<AssembledOperator>& family,
                                    double threshold = 0.9,
                                    const EigenOptions& opt = {}) {
  EdgeScan scan;
  for (const auto& op : family) {
    scan.counts_below.push_back(detail::inertia_nudged(op, threshold, opt.mass));
    scan.second_eigenvalues.push_back(bracket_eigenvalue(op, 1, opt).second);
    const std::size_t below = detail::inertia_nudged(op, op.far_potential, opt.mass);
    scan.edge_estimates.push_back(bracket_eigenvalue(op, below, opt).second);
  }
  scan.stabilized = !scan.counts_below.empty() &&
                    std::all_of(scan.counts_below.begin(), scan.counts_below.end(),
                                [&](std::size_t c) { return c == scan.counts_below[0]; });
  scan.infimum_estimate = scan.edge_estimates.empty()
                              ? 0.0
                              : *std::min_element(scan.edge_estimates.begin(),
                                                  scan.edge_estimates.end());
  return scan;
}

}  // namespace sgj
