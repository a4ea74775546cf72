#pragma once

// Y-junction geometry, truncated meshes, graph-valued fields and the
// norms / vertex checks shared by every other module.
//
// Internally every edge is parametrised by the outward distance s >= 0 from
// the vertex. Physical coordinates only appear at the API boundary: for a
// type I junction edge 1 is (-inf, 0) so x = -s there, otherwise x = s.

#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgj {

inline constexpr std::size_t kEdges = 3;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Orientation { TypeI, TypeII };

struct YJunction {
  std::array<double, kEdges> speeds{1.0, 1.0, 1.0};
  Orientation orientation = Orientation::TypeI;

  YJunction() = default;
  explicit YJunction(std::array<double, kEdges> c,
                     Orientation o = Orientation::TypeI)
      : speeds(c), orientation(o) {
    for (double cj : speeds)
      if (!(cj > 0.0) || !std::isfinite(cj))
        throw ConfigError("edge speeds must be positive and finite");
  }

  double speed_sum() const { return speeds[0] + speeds[1] + speeds[2]; }
  double max_speed() const {
    return std::max({speeds[0], speeds[1], speeds[2]});
  }

  // d/dx = sign * d/ds on the given edge.
  double outward_sign(std::size_t edge) const {
    return (edge == 0 && orientation == Orientation::TypeI) ? -1.0 : 1.0;
  }
  double to_outward(std::size_t edge, double x) const {
    return outward_sign(edge) * x;
  }
  double to_physical(std::size_t edge, double s) const {
    return outward_sign(edge) * s;
  }

  bool operator==(const YJunction&) const = default;
};

struct VertexCoupling {
  double Z = 0.0;
};

// Uniformly meshed truncation of the three half-lines. Node 0 of every edge is
// the shared vertex, node n_j is the far end (homogeneous Dirichlet for
// energy-space data). Unknowns are ordered vertex first, then the interior
// nodes 1..n_j-1 of edge 0, 1, 2.
struct Mesh {
  YJunction junction;
  std::array<double, kEdges> lengths{};
  double spacing = 0.0;
  std::array<std::size_t, kEdges> nodes{};  // n_j
  std::array<double, kEdges> steps{};       // L_j / n_j
  static constexpr std::size_t vertex_dof = 0;

  std::size_t interior(std::size_t edge) const { return nodes[edge] - 1; }
  std::size_t dof_count() const {
    return 1 + interior(0) + interior(1) + interior(2);
  }
  // Global index of interior node i (1 <= i < n_j) of an edge.
  std::size_t dof(std::size_t edge, std::size_t i) const {
    std::size_t offset = 1;
    for (std::size_t k = 0; k < edge; ++k) offset += interior(k);
    return offset + (i - 1);
  }
  double s(std::size_t edge, std::size_t i) const {
    return static_cast<double>(i) * steps[edge];
  }
  double max_length() const {
    return std::max({lengths[0], lengths[1], lengths[2]});
  }

  bool operator==(const Mesh&) const = default;
};

inline Mesh build_mesh(const YJunction& junction, double L, double h) {
  if (!(L > 0.0) || !std::isfinite(L))
    throw ConfigError("truncation length must be positive");
  if (!(h > 0.0) || !std::isfinite(h))
    throw ConfigError("mesh spacing must be positive");
  if (h > L / 8.0)
    throw ConfigError("mesh spacing h=" + std::to_string(h) +
                      " exceeds L/8 (need at least 8 nodes per edge)");
  Mesh m;
  m.junction = junction;
  m.spacing = h;
  for (std::size_t j = 0; j < kEdges; ++j) {
    m.lengths[j] = L;
    m.nodes[j] = static_cast<std::size_t>(std::llround(L / h));
    m.steps[j] = L / static_cast<double>(m.nodes[j]);
  }
  return m;
}

// Nodal samples on a mesh. values[j][i-1] holds the sample at s = i*h_j for
// i = 1..n_j (the last one is the far end); the vertex is stored once.
struct GraphField {
  Mesh mesh;
  double vertex = 0.0;
  std::array<std::vector<double>, kEdges> values;

  GraphField() = default;
  explicit GraphField(const Mesh& m) : mesh(m) {
    for (std::size_t j = 0; j < kEdges; ++j) values[j].assign(m.nodes[j], 0.0);
  }

  // Node value with i = 0 meaning the vertex.
  double at(std::size_t edge, std::size_t i) const {
    return i == 0 ? vertex : values[edge][i - 1];
  }
  double& at(std::size_t edge, std::size_t i) {
    return i == 0 ? vertex : values[edge][i - 1];
  }
  double far_end(std::size_t edge) const { return values[edge].back(); }
};

template <class F>
GraphField sample_outward(const Mesh& mesh, F&& f) {
  // f(edge, s); the vertex takes edge 0's value.
  GraphField g(mesh);
  g.vertex = f(std::size_t{0}, 0.0);
  for (std::size_t j = 0; j < kEdges; ++j)
    for (std::size_t i = 1; i <= mesh.nodes[j]; ++i)
      g.values[j][i - 1] = f(j, mesh.s(j, i));
  return g;
}

// Interior unknowns only; far-end samples are dropped.
inline std::vector<double> to_dofs(const GraphField& f) {
  const Mesh& m = f.mesh;
  std::vector<double> u(m.dof_count());
  u[Mesh::vertex_dof] = f.vertex;
  for (std::size_t j = 0; j < kEdges; ++j)
    for (std::size_t i = 1; i < m.nodes[j]; ++i) u[m.dof(j, i)] = f.at(j, i);
  return u;
}

inline GraphField from_dofs(const Mesh& m, const std::vector<double>& u,
                            std::array<double, kEdges> far = {0.0, 0.0, 0.0}) {
  if (u.size() != m.dof_count())
    throw std::invalid_argument("dof vector does not match mesh");
  GraphField f(m);
  f.vertex = u[Mesh::vertex_dof];
  for (std::size_t j = 0; j < kEdges; ++j) {
    for (std::size_t i = 1; i < m.nodes[j]; ++i) f.at(j, i) = u[m.dof(j, i)];
    f.values[j].back() = far[j];
  }
  return f;
}

// Trapezoid weights of the unknowns (vertex gets sum_j h_j / 2).
inline std::vector<double> trapezoid_weights(const Mesh& m) {
  std::vector<double> w(m.dof_count());
  w[Mesh::vertex_dof] = 0.5 * (m.steps[0] + m.steps[1] + m.steps[2]);
  for (std::size_t j = 0; j < kEdges; ++j)
    for (std::size_t i = 1; i < m.nodes[j]; ++i) w[m.dof(j, i)] = m.steps[j];
  return w;
}

inline void require_same_mesh(const GraphField& f, const GraphField& g) {
  if (!(f.mesh == g.mesh))
    throw std::invalid_argument("fields live on different meshes");
}

inline double l2_inner(const GraphField& f, const GraphField& g) {
  require_same_mesh(f, g);
  const Mesh& m = f.mesh;
  double sum = 0.0;
  for (std::size_t j = 0; j < kEdges; ++j) {
    const double h = m.steps[j];
    const std::size_t n = m.nodes[j];
    double e = 0.5 * h * (f.vertex * g.vertex + f.at(j, n) * g.at(j, n));
    for (std::size_t i = 1; i < n; ++i) e += h * f.at(j, i) * g.at(j, i);
    sum += e;
  }
  return sum;
}

inline double l2_norm(const GraphField& f) { return std::sqrt(l2_inner(f, f)); }

// d/ds along an edge: centered in the interior, second-order one-sided at the
// vertex and the far end.
inline std::vector<double> outward_derivative(const GraphField& f,
                                              std::size_t edge) {
  const std::size_t n = f.mesh.nodes[edge];
  const double h = f.mesh.steps[edge];
  std::vector<double> d(n + 1);
  d[0] = (-3.0 * f.at(edge, 0) + 4.0 * f.at(edge, 1) - f.at(edge, 2)) / (2 * h);
  for (std::size_t i = 1; i < n; ++i)
    d[i] = (f.at(edge, i + 1) - f.at(edge, i - 1)) / (2 * h);
  d[n] = (3.0 * f.at(edge, n) - 4.0 * f.at(edge, n - 1) + f.at(edge, n - 2)) /
         (2 * h);
  return d;
}

// beta of the equivalent H^1 norm: Z^2 / (sum c_j)^2 for Z < 0, else 0.
inline double norm_shift(double Z, const YJunction& junction) {
  if (Z >= 0.0) return 0.0;
  const double sc = junction.speed_sum();
  return Z * Z / (sc * sc);
}

// sum_j c_j^2 ||f_j'||^2 + (beta + 1) ||f||^2 + Z |f(0)|^2
inline double h1z_norm_sq(const GraphField& f, double Z,
                          const YJunction& junction) {
  const Mesh& m = f.mesh;
  double grad = 0.0;
  for (std::size_t j = 0; j < kEdges; ++j) {
    const auto d = outward_derivative(f, j);
    const double h = m.steps[j];
    const std::size_t n = m.nodes[j];
    double e = 0.5 * h * (d[0] * d[0] + d[n] * d[n]);
    for (std::size_t i = 1; i < n; ++i) e += h * d[i] * d[i];
    grad += junction.speeds[j] * junction.speeds[j] * e;
  }
  const double beta = norm_shift(Z, junction);
  return grad + (beta + 1.0) * l2_inner(f, f) + Z * f.vertex * f.vertex;
}

struct VertexResiduals {
  double continuity = 0.0;
  double flux = 0.0;
};

// values / derivatives are one-sided limits at the vertex in the physical
// coordinate of each edge (edge 1 from the left for a type I junction).
inline VertexResiduals vertex_residuals(const std::array<double, kEdges>& u,
                                        const std::array<double, kEdges>& du,
                                        double Z, const YJunction& junction) {
  VertexResiduals r;
  for (std::size_t i = 0; i < kEdges; ++i)
    for (std::size_t j = i + 1; j < kEdges; ++j)
      r.continuity = std::max(r.continuity, std::abs(u[i] - u[j]));
  double flux = -Z * u[0];
  for (std::size_t j = 0; j < kEdges; ++j) {
    const double c = junction.speeds[j];
    flux += junction.outward_sign(j) * c * c * du[j];
  }
  r.flux = std::abs(flux);
  return r;
}

// One-sided vertex data of a sampled field (second-order stencils).
inline VertexResiduals vertex_residuals(const GraphField& f, double Z) {
  std::array<double, kEdges> u{}, du{};
  for (std::size_t j = 0; j < kEdges; ++j) {
    u[j] = f.vertex;
    du[j] = f.mesh.junction.outward_sign(j) * outward_derivative(f, j)[0];
  }
  return vertex_residuals(u, du, Z, f.mesh.junction);
}

}  // namespace sgj
