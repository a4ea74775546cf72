#pragma once

// Closed-form stationary sine-Gordon profiles on the Y-junction with a
// delta-coupled vertex: the kink family (decays to 0 on every edge) and the
// unit-speed kink/anti-kink family (2*pi at the far end of edge 1).
//
// Both families are 4*arctan(w_j(s)) on each edge with w_j(s) = y * exp(+-s/c_j),
// so the vertex flux condition reduces to shape_fn(y) = const.

#include <cmath>
#include <numbers>
#include <string>
#include <variant>

#include "sgjunction/graph.hpp"

namespace sgj {

inline constexpr double kPi = std::numbers::pi;

class NoProfileError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

enum class KinkKind { Tail, Smooth, Bump };

inline const char* to_string(KinkKind k) {
  switch (k) {
    case KinkKind::Tail: return "Tail";
    case KinkKind::Smooth: return "Smooth";
    case KinkKind::Bump: return "Bump";
  }
  return "?";
}

// (1 + y^2) arctan(y) / y, increasing from 1 (y -> 0+) to infinity.
inline double shape_fn(double y) {
  if (!(y > 0.0)) throw std::domain_error("shape_fn requires y > 0");
  if (y < 1e-4) {
    const double y2 = y * y;
    return 1.0 + y2 * (2.0 / 3.0 - y2 * 2.0 / 15.0);
  }
  return (1.0 + y * y) * std::atan(y) / y;
}

// No root in (0, 1): obstruction to a kernel for tail profiles.
inline double kernel_obstruction(double y) {
  return (1.0 - y * y) * std::atan(y) - y;
}

namespace detail {

// Solves shape_fn(y) = target > 1 by bisection. Deterministic and
// unconditionally convergent since shape_fn is monotone.
inline double invert_shape_fn(double target) {
  double lo = 1e-12, hi = 2.0;
  while (shape_fn(hi) < target) hi *= 2.0;
  if (shape_fn(lo) > target) return lo;
  for (int it = 0; it < 400 && hi - lo > 2e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (shape_fn(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct ArcTanProfile {
  double phi, ds, dss;  // derivatives in the outward coordinate
};

// 4*arctan(w) with w = y * exp(sigma * s / c), evaluated without overflow.
inline ArcTanProfile arctan_profile(double log_y, double sigma, double c,
                                    double s) {
  const double lw = log_y + sigma * s / c;
  ArcTanProfile p{};
  if (lw <= 0.0) {
    const double w = std::exp(lw);
    const double q = 1.0 + w * w;
    p.phi = 4.0 * std::atan(w);
    p.ds = 4.0 * sigma * w / (c * q);
    p.dss = 4.0 * w * (1.0 - w * w) / (c * c * q * q);
  } else {
    const double u = std::exp(-lw);  // 1/w
    const double q = 1.0 + u * u;
    p.phi = 2.0 * kPi - 4.0 * std::atan(u);
    p.ds = 4.0 * sigma * u / (c * q);
    p.dss = -4.0 * u * (1.0 - u * u) / (c * c * q * q);
  }
  return p;
}

}  // namespace detail

struct ProfileValue {
  double phi, dphi, d2phi;  // physical-coordinate derivatives
};

struct KinkProfile {
  std::array<double, kEdges> shifts{};  // a_1, a_2, a_3
  double Z = 0.0;
  YJunction junction;
  KinkKind kind = KinkKind::Smooth;

  // y = exp(-a_1 / c_1) = phi_j(0) / 4 in arctan form.
  double vertex_parameter() const {
    return std::exp(-shifts[0] / junction.speeds[0]);
  }
};

struct AntiKinkProfile {
  double shift = 0.0;  // a_1 = a_2 = a_3
  double Z = 0.0;
  YJunction junction;  // unit speeds
};

using Profile = std::variant<KinkProfile, AntiKinkProfile>;

inline void check_kink_range(double Z, const YJunction& junction) {
  const double sc = junction.speed_sum();
  if (!(Z > -sc && Z < 0.0))
    throw NoProfileError("no kink profile: Z=" + std::to_string(Z) +
                         " outside the admissible interval (" +
                         std::to_string(-sc) + ", 0)");
}

inline void check_antikink_range(double Z) {
  if (!(Z > -1.0 && Z < 0.0))
    throw NoProfileError("no anti-kink profile: Z=" + std::to_string(Z) +
                         " outside the admissible interval (-1, 0)");
}

// Residual of -(y / (1 + y^2)) * sum c_j - Z * arctan(y) at y = exp(-a_1/c_1).
inline double kink_shift_residual(const KinkProfile& p) {
  const double y = p.vertex_parameter();
  return -y / (1.0 + y * y) * p.junction.speed_sum() - p.Z * std::atan(y);
}

inline KinkProfile solve_kink_shift(double Z, const YJunction& junction) {
  check_kink_range(Z, junction);
  const double sc = junction.speed_sum();
  const double y = detail::invert_shape_fn(-sc / Z);
  KinkProfile p;
  p.Z = Z;
  p.junction = junction;
  const auto& c = junction.speeds;
  p.shifts[0] = -c[0] * std::log(y);
  p.shifts[1] = -c[1] * p.shifts[0] / c[0];
  p.shifts[2] = -c[2] * p.shifts[0] / c[0];
  const double z_smooth = -2.0 / kPi * sc;
  if (std::abs(Z - z_smooth) <= 1e-12 * sc)
    p.kind = KinkKind::Smooth;
  else
    p.kind = p.shifts[0] > 0.0 ? KinkKind::Tail : KinkKind::Bump;
  if (std::abs(kink_shift_residual(p)) > 1e-14 * std::max(1.0, sc))
    throw NumericalError("kink shift solver did not reach tolerance");
  return p;
}

inline double antikink_shift_residual(const AntiKinkProfile& p) {
  const double y = std::exp(p.shift);
  return -y / (1.0 + y * y) - p.Z * std::atan(y);
}

inline AntiKinkProfile solve_antikink_shift(
    double Z, Orientation orientation = Orientation::TypeI) {
  check_antikink_range(Z);
  AntiKinkProfile p;
  p.Z = Z;
  p.junction = YJunction({1.0, 1.0, 1.0}, orientation);
  p.shift = std::log(detail::invert_shape_fn(-1.0 / Z));
  if (std::abs(antikink_shift_residual(p)) > 1e-14)
    throw NumericalError("anti-kink shift solver did not reach tolerance");
  return p;
}

inline const YJunction& junction_of(const Profile& p) {
  return std::visit([](const auto& q) -> const YJunction& { return q.junction; },
                    p);
}
inline double coupling_of(const Profile& p) {
  return std::visit([](const auto& q) { return q.Z; }, p);
}
inline bool is_antikink(const Profile& p) {
  return std::holds_alternative<AntiKinkProfile>(p);
}

inline detail::ArcTanProfile eval_outward(const KinkProfile& p,
                                          std::size_t edge, double s) {
  return detail::arctan_profile(-p.shifts[0] / p.junction.speeds[0], -1.0,
                                p.junction.speeds[edge], s);
}

inline detail::ArcTanProfile eval_outward(const AntiKinkProfile& p,
                                          std::size_t edge, double s) {
  return detail::arctan_profile(p.shift, edge == 0 ? 1.0 : -1.0, 1.0, s);
}

inline detail::ArcTanProfile eval_outward(const Profile& p, std::size_t edge,
                                          double s) {
  return std::visit([&](const auto& q) { return eval_outward(q, edge, s); }, p);
}

namespace detail {
template <class P>
ProfileValue eval_physical(const P& p, std::size_t edge, double x) {
  if (edge >= kEdges) throw std::out_of_range("edge index must be 0, 1 or 2");
  const double sign = p.junction.outward_sign(edge);
  const double s = sign * x;
  if (s < 0.0)
    throw std::domain_error("coordinate x=" + std::to_string(x) +
                            " does not lie on edge " + std::to_string(edge + 1));
  const auto v = eval_outward(p, edge, s);
  return {v.phi, sign * v.ds, v.dss};
}
}  // namespace detail

// phi, phi', phi'' at physical coordinate x of an edge.
inline ProfileValue eval_kink(const KinkProfile& p, std::size_t edge, double x) {
  return detail::eval_physical(p, edge, x);
}
inline ProfileValue eval_antikink(const AntiKinkProfile& p, std::size_t edge,
                                  double x) {
  return detail::eval_physical(p, edge, x);
}
inline ProfileValue evaluate(const Profile& p, std::size_t edge, double x) {
  return std::visit(
      [&](const auto& q) { return detail::eval_physical(q, edge, x); }, p);
}

inline VertexResiduals profile_vertex_residuals(const Profile& p) {
  std::array<double, kEdges> u{}, du{};
  const auto& J = junction_of(p);
  for (std::size_t j = 0; j < kEdges; ++j) {
    const auto v = eval_outward(p, j, 0.0);
    u[j] = v.phi;
    du[j] = J.outward_sign(j) * v.ds;
  }
  return vertex_residuals(u, du, coupling_of(p), J);
}

inline GraphField sample_profile(const Profile& p, const Mesh& mesh) {
  if (!(mesh.junction.speeds == junction_of(p).speeds))
    throw std::invalid_argument("mesh was built for a different junction");
  return sample_outward(mesh, [&](std::size_t j, double s) {
    return eval_outward(p, j, s).phi;
  });
}

// Physical derivative field phi'(x). Continuous at the vertex only for the
// anti-kink family, where phi_j'(0+) = phi_1'(0-).
inline GraphField sample_profile_derivative(const Profile& p, const Mesh& mesh) {
  const auto& J = junction_of(p);
  return sample_outward(mesh, [&](std::size_t j, double s) {
    return J.outward_sign(j) * eval_outward(p, j, s).ds;
  });
}

}  // namespace sgj
