#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Sparse>

#include "csslab/types.hpp"

namespace csslab {

/// Gauss-Lobatto-Legendre reference element on [-1, 1] of polynomial degree p.
struct ReferenceElement {
  int degree = 0;
  RVec nodes;
  RVec weights;
  RVec bary;               // barycentric weights
  Eigen::MatrixXd diff;    // diff(i, j) = l_j'(x_i)
  Eigen::MatrixXd cumint;  // cumint(i, j) = int_{-1}^{x_i} l_j

  explicit ReferenceElement(int p);
  // Values of all cardinal polynomials at x.
  RVec cardinal(double x) const;
};

struct GridSpec {
  int m = 1;
  int n = 4096;        // nodes, excluding the origin; multiple of degree
  double r_max = 1e3;
  double core = 2.0;   // uniform elements on [0, core], geometric beyond
  int degree = 8;
};

// Element breakpoints: uniform on [0, core], geometric stretching out to r_max.
std::vector<double> graded_breaks(int elements, double core, double r_max);

/// Spectral-element radial mesh. Nodes are the GLL points of every element,
/// with the origin dropped (fields vanish there). Quadrature weights include
/// the 2*pi*r Jacobian, so integrate() is the planar integral of a radial field.
class RadialGrid {
 public:
  explicit RadialGrid(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  int m() const { return spec_.m; }
  int size() const { return static_cast<int>(r_.size()); }
  int degree() const { return spec_.degree; }
  int elements() const { return static_cast<int>(breaks_.size()) - 1; }
  double r_max() const { return breaks_.back(); }
  const RVec& r() const { return r_; }
  const RVec& w() const { return w_; }
  const RVec& dr() const { return dr_; }
  const std::vector<double>& breaks() const { return breaks_; }
  const ReferenceElement& reference() const { return ref_; }
  double h(int e) const { return breaks_[e + 1] - breaks_[e]; }
  double min_spacing() const;

  template <class T>
  T integrate(const Vec<T>& f) const;
  double inner(const CVec& f, const CVec& g) const;
  double norm(const CVec& f) const;

  // Pointwise derivative: element-local differentiation, averaged at shared nodes.
  template <class T>
  Vec<T> deriv(const Vec<T>& f, T origin = T(0)) const;
  // int_0^{r_i} g dr, accumulated left to right.
  template <class T>
  Vec<T> cumulative(const Vec<T>& g, T origin = T(0)) const;
  // int_{r_i}^{r_max} g dr, accumulated right to left.
  template <class T>
  Vec<T> tail(const Vec<T>& g, T origin = T(0)) const;
  // Evaluate the piecewise interpolant; zero beyond r_max.
  template <class T>
  Vec<T> interpolate(const Vec<T>& f, const RVec& at, T origin = T(0)) const;

  // Galerkin stiffness of int |u_r|^2 (2 pi r dr), origin row removed. Symmetric.
  Eigen::SparseMatrix<double> stiffness() const;
  // Dense operator matrices for small grids.
  Eigen::MatrixXd deriv_matrix() const;
  Eigen::MatrixXd cumulative_matrix() const;

  int locate(double r) const;

 private:
  GridSpec spec_;
  ReferenceElement ref_;
  std::vector<double> breaks_;
  RVec r_, w_, dr_;
  RVec share_;  // number of elements touching each node
};

using GridPtr = std::shared_ptr<const RadialGrid>;
GridPtr make_grid(const GridSpec& spec);

struct RadialField {
  GridPtr grid;
  CVec values;
  std::optional<int> m_override;

  int index() const { return m_override ? *m_override : grid->m(); }
  RadialField like(CVec v) const { return {grid, std::move(v), m_override}; }
};

RadialField make_field(GridPtr grid, CVec values, std::optional<int> m_override = std::nullopt);

cplx integrate(const RadialField& f);
double inner_r(const RadialField& f, const RadialField& g);
RadialField deriv_r(const RadialField& f);
RadialField lambda_op(const RadialField& f);
double norm_l2(const RadialField& f);
double norm_h1m(const RadialField& f);

// Raw-vector forms used by the solvers.
CVec lambda_op(const RadialGrid& g, const CVec& f);
double norm_h1m(const RadialGrid& g, const CVec& f, int index);

}  // namespace csslab
