#pragma once

// Symmetric matrices with the sparsity of a three-armed star: one vertex
// unknown coupled to the first node of three tridiagonal chains. Eliminating
// from the far ends towards the vertex produces no fill, so the LDL^T
// factorisation is O(n) and its pivots give the inertia exactly.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "sgjunction/graph.hpp"

namespace sgj {

struct TreeMatrix {
  Mesh mesh;
  double vertex_diag = 0.0;
  // diag[j][i-1]: entry (i, i) for interior node i of edge j.
  std::array<std::vector<double>, kEdges> diag;
  // off[j][i-1]: entry (i-1, i) along edge j, node 0 being the vertex.
  std::array<std::vector<double>, kEdges> off;

  TreeMatrix() = default;
  explicit TreeMatrix(const Mesh& m) : mesh(m) {
    for (std::size_t j = 0; j < kEdges; ++j) {
      diag[j].assign(m.interior(j), 0.0);
      off[j].assign(m.interior(j), 0.0);
    }
  }

  std::size_t size() const { return mesh.dof_count(); }

  // Diagonal entry of node i on edge j (i = 0 is the vertex).
  double& d(std::size_t j, std::size_t i) {
    return i == 0 ? vertex_diag : diag[j][i - 1];
  }
  double d(std::size_t j, std::size_t i) const {
    return i == 0 ? vertex_diag : diag[j][i - 1];
  }

  std::vector<double> apply(std::span<const double> x) const {
    if (x.size() != size()) throw std::invalid_argument("size mismatch");
    std::vector<double> y(size(), 0.0);
    y[0] = vertex_diag * x[0];
    for (std::size_t j = 0; j < kEdges; ++j) {
      const std::size_t n = mesh.interior(j);
      for (std::size_t i = 1; i <= n; ++i) {
        const std::size_t gi = mesh.dof(j, i);
        const std::size_t gp = (i == 1) ? 0 : gi - 1;
        const double a = off[j][i - 1];
        y[gi] += diag[j][i - 1] * x[gi] + a * x[gp];
        y[gp] += a * x[gi];
      }
    }
    return y;
  }

  // Same product written as (row sum) * x_i + sum_j a_ij (x_j - x_i); for
  // smooth x the differences are small and round-off stays near machine
  // precision relative to the result rather than to |A| |x|.
  std::vector<double> apply_differences(std::span<const double> x) const {
    if (x.size() != size()) throw std::invalid_argument("size mismatch");
    std::vector<double> y(size(), 0.0);
    double row0 = vertex_diag;
    for (std::size_t j = 0; j < kEdges; ++j)
      if (mesh.interior(j) > 0) row0 += off[j][0];
    y[0] = row0 * x[0];
    for (std::size_t j = 0; j < kEdges; ++j) {
      const std::size_t n = mesh.interior(j);
      for (std::size_t i = 1; i <= n; ++i) {
        const std::size_t gi = mesh.dof(j, i);
        const std::size_t gp = (i == 1) ? 0 : gi - 1;
        const double a = off[j][i - 1];
        const double right = i < n ? off[j][i] : 0.0;
        const double diff = x[gi] - x[gp];
        y[gi] += (diag[j][i - 1] + a + right) * x[gi] - a * diff;
        y[gp] += a * diff;
      }
    }
    return y;
  }

  double quadratic(std::span<const double> x) const {
    const auto y = apply(x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += x[i] * y[i];
    return s;
  }

  double max_abs_diag() const {
    double m = std::abs(vertex_diag);
    for (const auto& dj : diag)
      for (double v : dj) m = std::max(m, std::abs(v));
    return m;
  }

  // Coordinate list (row, col, value) with both triangles, 0-based.
  struct Entry {
    std::size_t row, col;
    double value;
  };
  std::vector<Entry> entries() const {
    std::vector<Entry> e;
    e.push_back({0, 0, vertex_diag});
    for (std::size_t j = 0; j < kEdges; ++j)
      for (std::size_t i = 1; i <= mesh.interior(j); ++i) {
        const std::size_t gi = mesh.dof(j, i);
        const std::size_t gp = (i == 1) ? 0 : gi - 1;
        e.push_back({gi, gi, diag[j][i - 1]});
        e.push_back({gi, gp, off[j][i - 1]});
        e.push_back({gp, gi, off[j][i - 1]});
      }
    std::sort(e.begin(), e.end(), [](const Entry& a, const Entry& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    return e;
  }
};

// alpha * A + beta * B
inline TreeMatrix combine(double alpha, const TreeMatrix& A, double beta,
                          const TreeMatrix& B) {
  if (!(A.mesh == B.mesh)) throw std::invalid_argument("mesh mismatch");
  TreeMatrix C(A.mesh);
  C.vertex_diag = alpha * A.vertex_diag + beta * B.vertex_diag;
  for (std::size_t j = 0; j < kEdges; ++j)
    for (std::size_t k = 0; k < A.diag[j].size(); ++k) {
      C.diag[j][k] = alpha * A.diag[j][k] + beta * B.diag[j][k];
      C.off[j][k] = alpha * A.off[j][k] + beta * B.off[j][k];
    }
  return C;
}

inline TreeMatrix diagonal_matrix(const Mesh& m, std::span<const double> w) {
  TreeMatrix D(m);
  D.vertex_diag = w[0];
  for (std::size_t j = 0; j < kEdges; ++j)
    for (std::size_t i = 1; i < m.nodes[j]; ++i) D.diag[j][i - 1] = w[m.dof(j, i)];
  return D;
}

class ZeroPivotError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// LDL^T with leaves eliminated first. pivot[j][i-1] belongs to node i of edge
// j, vertex_pivot to the vertex (eliminated last).
class TreeFactorization {
 public:
  static constexpr double kPivotTolerance = 1e-13;

  explicit TreeFactorization(const TreeMatrix& A) : A_(A) {
    const double scale = std::max(A.max_abs_diag(), 1e-300);
    auto check = [&](double p) {
      if (std::abs(p) <= kPivotTolerance * scale)
        throw ZeroPivotError("shift hits spectrum: zero pivot in LDL^T");
      if (p < 0.0) ++negative_;
    };
    double vp = A.vertex_diag;
    for (std::size_t j = 0; j < kEdges; ++j) {
      const std::size_t n = A.mesh.interior(j);
      auto& p = pivot_[j];
      p.assign(n, 0.0);
      for (std::size_t i = n; i >= 1; --i) {
        double v = A.diag[j][i - 1];
        if (i < n) {
          const double a = A.off[j][i];  // couples i and i+1
          v -= a * a / p[i];
        }
        check(v);
        p[i - 1] = v;
      }
      const double a0 = A.off[j][0];
      vp -= a0 * a0 / p[0];
    }
    check(vp);
    vertex_pivot_ = vp;
  }

  // Number of negative pivots = number of negative eigenvalues of A.
  std::size_t negative_count() const { return negative_; }

  std::vector<double> solve(std::span<const double> b) const {
    const Mesh& m = A_.mesh;
    std::vector<double> y(b.begin(), b.end());
    // Forward: fold each chain into its parent, leaf first.
    for (std::size_t j = 0; j < kEdges; ++j) {
      const std::size_t n = m.interior(j);
      for (std::size_t i = n; i >= 1; --i) {
        const std::size_t gi = m.dof(j, i);
        const std::size_t gp = (i == 1) ? 0 : gi - 1;
        y[gp] -= A_.off[j][i - 1] * y[gi] / pivot_[j][i - 1];
      }
    }
    std::vector<double> x(y.size());
    x[0] = y[0] / vertex_pivot_;
    for (std::size_t j = 0; j < kEdges; ++j) {
      const std::size_t n = m.interior(j);
      for (std::size_t i = 1; i <= n; ++i) {
        const std::size_t gi = m.dof(j, i);
        const std::size_t gp = (i == 1) ? 0 : gi - 1;
        x[gi] = (y[gi] - A_.off[j][i - 1] * x[gp]) / pivot_[j][i - 1];
      }
    }
    return x;
  }

 private:
  TreeMatrix A_;
  std::array<std::vector<double>, kEdges> pivot_;
  double vertex_pivot_ = 0.0;
  std::size_t negative_ = 0;
};

}  // namespace sgj
