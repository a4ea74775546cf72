#pragma once

// Linear-element discretisation of -c_j^2 d^2/dx^2 + V_j on the truncated
// junction. The delta coupling enters the quadratic form as Z * u(0)^2, i.e. as
// a single addition to the vertex diagonal, so stiffness and mass stay
// symmetric and inertia counts are meaningful.

#include <array>
#include <complex>
#include <functional>
#include <ostream>
#include <iomanip>
#include <string>
#include <vector>

#include "sgjunction/graph.hpp"
#include "sgjunction/profiles.hpp"
#include "sgjunction/quadrature.hpp"
#include "sgjunction/tree_matrix.hpp"

namespace sgj {

enum class PotentialKind { Free, Kink, AntiKink };

inline const char* to_string(PotentialKind k) {
  switch (k) {
    case PotentialKind::Free: return "free";
    case PotentialKind::Kink: return "kink";
    case PotentialKind::AntiKink: return "antikink";
  }
  return "?";
}

struct AssemblyOptions {
  // Fault-injection hook for the self-check: assembles -Z instead of Z.
  bool flip_vertex_coupling = false;
};

struct AssembledOperator {
  Mesh mesh;
  double Z = 0.0;
  PotentialKind potential_kind = PotentialKind::Free;
  TreeMatrix stiffness;
  TreeMatrix mass;                  // consistent
  std::vector<double> lumped_mass;  // trapezoid weights (row sums of mass)
  std::vector<double> potential;    // nodal V at the unknowns, empty if free
  double far_potential = 0.0;       // V at the truncated far ends

  TreeMatrix lumped_mass_matrix() const {
    return diagonal_matrix(mesh, lumped_mass);
  }
};

inline AssembledOperator assemble_free(const Mesh& mesh, double Z,
                                       AssemblyOptions opt = {}) {
  AssembledOperator op;
  op.mesh = mesh;
  op.Z = Z;
  op.stiffness = TreeMatrix(mesh);
  op.mass = TreeMatrix(mesh);
  TreeMatrix& K = op.stiffness;
  TreeMatrix& M = op.mass;
  for (std::size_t j = 0; j < kEdges; ++j) {
    const double c = mesh.junction.speeds[j];
    const double h = mesh.steps[j];
    const double k = c * c / h;
    const double m_diag = h / 3.0, m_off = h / 6.0;
    const std::size_t n = mesh.nodes[j];
    // Element e joins nodes e and e+1; node n is Dirichlet and dropped.
    for (std::size_t e = 0; e < n; ++e) {
      K.d(j, e) += k;
      M.d(j, e) += m_diag;
      if (e + 1 < n) {
        K.d(j, e + 1) += k;
        M.d(j, e + 1) += m_diag;
        K.off[j][e] -= k;
        M.off[j][e] += m_off;
      }
    }
  }
  K.vertex_diag += opt.flip_vertex_coupling ? -Z : Z;
  op.lumped_mass = trapezoid_weights(mesh);
  return op;
}

// Adds the multiplication operator cos(phi) with nodal quadrature.
inline AssembledOperator assemble_linearized(const Mesh& mesh, double Z,
                                             const GraphField& background,
                                             PotentialKind kind,
                                             AssemblyOptions opt = {}) {
  if (!(background.mesh == mesh))
    throw std::invalid_argument("background profile sampled on another mesh");
  AssembledOperator op = assemble_free(mesh, Z, opt);
  op.potential_kind = kind;
  const auto phi = to_dofs(background);
  op.potential.resize(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) op.potential[i] = std::cos(phi[i]);
  op.stiffness.vertex_diag += op.lumped_mass[0] * op.potential[0];
  for (std::size_t j = 0; j < kEdges; ++j)
    for (std::size_t i = 1; i < mesh.nodes[j]; ++i) {
      const std::size_t g = mesh.dof(j, i);
      op.stiffness.diag[j][i - 1] += op.lumped_mass[g] * op.potential[g];
    }
  op.far_potential = std::cos(background.far_end(0));
  return op;
}

inline AssembledOperator assemble_linearized(const Mesh& mesh,
                                             const Profile& profile,
                                             AssemblyOptions opt = {}) {
  return assemble_linearized(
      mesh, coupling_of(profile), sample_profile(profile, mesh),
      is_antikink(profile) ? PotentialKind::AntiKink : PotentialKind::Kink,
      opt);
}

inline double quadratic_form(const AssembledOperator& op, const GraphField& f) {
  if (!(f.mesh == op.mesh)) throw std::invalid_argument("mesh mismatch");
  return op.stiffness.quadratic(to_dofs(f));
}

// Matrix Market coordinate dump (1-based, both triangles).
inline void write_matrix_market(std::ostream& os, const TreeMatrix& A,
                                const std::string& comment = {}) {
  const auto e = A.entries();
  os << "%%MatrixMarket matrix coordinate real general\n";
  if (!comment.empty()) os << "% " << comment << "\n";
  os << A.size() << ' ' << A.size() << ' ' << e.size() << '\n';
  os << std::setprecision(17);
  for (const auto& x : e) os << x.row + 1 << ' ' << x.col + 1 << ' ' << x.value << '\n';
}

// ---------------------------------------------------------------------------
// Closed-form free resolvent (F_Z + lambda^2)^{-1} via the 3x3 matching system.

struct ResolventData {
  double lambda = 0.0;
  std::array<double, kEdges> d{};
  std::array<double, kEdges> t{};
  std::array<std::array<double, kEdges>, kEdges> matrix{};
  double det = 0.0;
};

// det M = (sum c_j + Z / lambda) / (c1 c2 c3)^2
inline double resolvent_det_formula(double lambda, double Z,
                                    const YJunction& junction) {
  const auto& c = junction.speeds;
  const double p = c[0] * c[1] * c[2];
  return (junction.speed_sum() + Z / lambda) / (p * p);
}

inline std::array<std::array<double, kEdges>, kEdges> resolvent_matrix(
    double lambda, double Z, const YJunction& junction) {
  const auto& c = junction.speeds;
  return {{{1.0 / (c[0] * c[0]), -1.0 / (c[1] * c[1]), 0.0},
           {0.0, 1.0 / (c[1] * c[1]), -1.0 / (c[2] * c[2])},
           {1.0 / c[0] + Z / (c[0] * c[0] * lambda), 1.0 / c[1], 1.0 / c[2]}}};
}

inline double det3(const std::array<std::array<double, 3>, 3>& a) {
  return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
         a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
         a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

enum class ResolventForm {
  Matching,            // formulas with matched constants d_j, any Z
  WithProjectionTerm,  // additionally adds the per-edge rank-one term for Z < 0
};

struct ResolventResult {
  GraphField field;
  ResolventData data;
  // One-sided vertex limits in physical coordinates, from the closed form.
  std::array<double, kEdges> vertex_values{};
  std::array<double, kEdges> vertex_derivs{};
};

// u(edge, s) in the outward coordinate; integrals are taken over [0, L_j].
using EdgeFunction = std::function<double(std::size_t, double)>;

inline ResolventResult resolvent_free_apply(
    const EdgeFunction& u, const Mesh& mesh, double lambda, double Z,
    ResolventForm form = ResolventForm::Matching, double tol = 1e-12) {
  if (!(lambda > 0.0)) throw ConfigError("resolvent needs lambda > 0");
  const YJunction& J = mesh.junction;
  const auto& c = J.speeds;
  ResolventResult res;
  ResolventData& rd = res.data;
  rd.lambda = lambda;

  // A_i = int_0^{s_i} u e^{-k(s_i - y)},  B_i = int_{s_i}^{L} u e^{-k(y - s_i)}
  std::array<std::vector<double>, kEdges> conv;
  for (std::size_t j = 0; j < kEdges; ++j) {
    const double k = lambda / c[j];
    const double h = mesh.steps[j];
    const std::size_t n = mesh.nodes[j];
    const double decay = std::exp(-k * h);
    const double cell_tol = tol * h / mesh.lengths[j];
    std::vector<double> A(n + 1, 0.0), B(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = mesh.s(j, i), b = mesh.s(j, i + 1);
      A[i + 1] = decay * A[i] +
                 adaptive_simpson([&](double y) { return u(j, y) * std::exp(-k * (b - y)); },
                                  a, b, cell_tol);
    }
    for (std::size_t i = n; i-- > 0;) {
      const double a = mesh.s(j, i), b = mesh.s(j, i + 1);
      B[i] = decay * B[i + 1] +
             adaptive_simpson([&](double y) { return u(j, y) * std::exp(-k * (y - a)); },
                              a, b, cell_tol);
    }
    conv[j].resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) conv[j][i] = A[i] + B[i];
    rd.t[j] = B[0] / (2.0 * c[j]);
  }

  rd.matrix = resolvent_matrix(lambda, Z, J);
  rd.det = det3(rd.matrix);
  const double scale = resolvent_det_formula(lambda, 0.0, J);  // sum c / p^2
  if (std::abs(rd.det) <= 1e-10 * scale)
    throw NumericalError(
        "matching system singular: lambda is at the free eigenvalue "
        "(lambda = -Z / sum c_j)");
  const auto& t = rd.t;
  const std::array<double, kEdges> rhs{
      (t[1] - t[0]) / lambda, (t[2] - t[1]) / lambda,
      (c[0] * t[0] + c[1] * t[1] + c[2] * t[2] - Z / lambda * t[0]) / lambda};
  // Cramer's rule on the 3x3 system.
  for (std::size_t k = 0; k < kEdges; ++k) {
    auto Mk = rd.matrix;
    for (std::size_t r = 0; r < kEdges; ++r) Mk[r][k] = rhs[r];
    rd.d[k] = det3(Mk) / rd.det;
  }

  const bool project = form == ResolventForm::WithProjectionTerm && Z < 0.0;
  const double alpha = -Z / J.speed_sum();
  std::array<double, kEdges> proj{};
  if (project) {
    const double denom = lambda * lambda - alpha * alpha;
    for (std::size_t j = 0; j < kEdges; ++j)
      proj[j] = adaptive_simpson(
                    [&](double y) { return u(j, y) * std::exp(-alpha * y / c[j]); },
                    0.0, mesh.lengths[j], tol) /
                denom;
  }

  res.field = GraphField(mesh);
  auto value = [&](std::size_t j, std::size_t i) {
    const double s = mesh.s(j, i);
    double v = rd.d[j] / (c[j] * c[j]) * std::exp(-lambda * s / c[j]) +
               conv[j][i] / (2.0 * c[j] * lambda);
    if (project) v += proj[j] * std::exp(-alpha * s / c[j]);
    return v;
  };
  for (std::size_t j = 0; j < kEdges; ++j) {
    for (std::size_t i = 1; i <= mesh.nodes[j]; ++i) res.field.at(j, i) = value(j, i);
    res.vertex_values[j] = value(j, 0);
    double ds = -lambda * rd.d[j] / (c[j] * c[j] * c[j]) + t[j] / c[j];
    if (project) ds -= alpha / c[j] * proj[j];
    res.vertex_derivs[j] = J.outward_sign(j) * ds;
  }
  res.field.vertex = res.vertex_values[0];
  return res;
}

// Nodal data interpolated linearly between samples.
inline ResolventResult resolvent_free_apply(
    const GraphField& u, double lambda, double Z,
    ResolventForm form = ResolventForm::Matching) {
  const Mesh& m = u.mesh;
  EdgeFunction f = [&](std::size_t j, double s) {
    const double h = m.steps[j];
    const double r = s / h;
    std::size_t i = static_cast<std::size_t>(r);
    if (i >= m.nodes[j]) return u.at(j, m.nodes[j]);
    const double w = r - static_cast<double>(i);
    return (1.0 - w) * u.at(j, i) + w * u.at(j, i + 1);
  };
  return resolvent_free_apply(f, m, lambda, Z, form);
}

// ---------------------------------------------------------------------------

class NoBoundStateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct FreeEigenpair {
  double mu0;
  GraphField field;  // L2-normalised
};

// Only eigenvalue of F_Z: -Z^2 / (sum c)^2 with eigenfunction exp(-s*alpha/c_j),
// alpha = -Z / sum c.
inline FreeEigenpair free_eigenpair(double Z, const Mesh& mesh) {
  if (Z >= 0.0)
    throw NoBoundStateError("free operator has no point spectrum for Z >= 0");
  const YJunction& J = mesh.junction;
  const double alpha = -Z / J.speed_sum();
  FreeEigenpair ep{-alpha * alpha, sample_outward(mesh, [&](std::size_t j, double s) {
                     return std::exp(-alpha * s / J.speeds[j]);
                   })};
  const double nrm = l2_norm(ep.field);
  ep.field.vertex /= nrm;
  for (auto& e : ep.field.values)
    for (double& v : e) v /= nrm;
  return ep;
}

// Extension parameter of the vertex condition,
// Z(theta) = -sum c_j (e^{i pi/4} + e^{i(theta - pi/4)}) / (1 + e^{i theta}).
// Numerator and denominator are evaluated after factoring out e^{i theta/2},
// which avoids the cancellation in 1 + e^{i theta} near theta = pi.
inline std::complex<double> theta_to_z_complex(double theta,
                                               const YJunction& junction) {
  using namespace std::complex_literals;
  const double half = 0.5 * theta;
  const std::complex<double> num =
      std::exp(1i * (kPi / 4 - half)) + std::exp(1i * (half - kPi / 4));
  const std::complex<double> den = std::exp(-1i * half) + std::exp(1i * half);
  return -junction.speed_sum() * num / den;
}

// The same expression evaluated literally, kept for comparison.
inline std::complex<double> theta_to_z_direct(double theta,
                                              const YJunction& junction) {
  using namespace std::complex_literals;
  const std::complex<double> num =
      std::exp(1i * (kPi / 4)) + std::exp(1i * (theta - kPi / 4));
  const std::complex<double> den = 1.0 + std::exp(1i * theta);
  return -junction.speed_sum() * num / den;
}

inline double theta_to_z(double theta, const YJunction& junction) {
  if (!(theta >= 0.0 && theta < 2 * kPi))
    throw ConfigError("theta must lie in [0, 2pi)");
  if (std::abs(theta - kPi) < 1e-12)
    throw ConfigError("theta = pi is a pole of Z(theta)");
  const auto z = theta_to_z_complex(theta, junction);
  if (std::abs(z.imag()) > 1e-12 * std::max(1.0, std::abs(z.real())))
    throw NumericalError("Z(theta) has a non-negligible imaginary part");
  return z.real();
}

}  // namespace sgj
