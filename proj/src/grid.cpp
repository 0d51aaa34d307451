#include "csslab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <boost/math/special_functions/legendre.hpp>
#include <boost/math/tools/roots.hpp>

namespace csslab {

namespace {

using boost::math::legendre_p;

// Interior GLL nodes are the roots of P_p'; Newton from Chebyshev-Lobatto guesses.
RVec gll_nodes(int p) {
  RVec x(p + 1);
  x(0) = -1.0;
  x(p) = 1.0;
  for (int i = 1; i < p; ++i) {
    double xi = -std::cos(kPi * i / p);
    for (int it = 0; it < 100; ++it) {
      // (1-x^2) P' = p (P_{p-1} - x P_p); differentiate for Newton on P_p'.
      const double pp = legendre_p(p, xi);
      const double pm = legendre_p(p - 1, xi);
      const double d1 = p * (pm - xi * pp) / (1.0 - xi * xi);
      const double d2 = (2.0 * xi * d1 - p * (p + 1) * pp) / (1.0 - xi * xi);
      const double step = d1 / d2;
      xi -= step;
      if (std::abs(step) < 1e-16) break;
    }
    x(i) = xi;
  }
  return x;
}

}  // namespace

ReferenceElement::ReferenceElement(int p) : degree(p) {
  require(p >= 2, "element degree must be at least 2");
  nodes = gll_nodes(p);
  weights.resize(p + 1);
  for (int j = 0; j <= p; ++j) {
    const double pj = legendre_p(p, nodes(j));
    weights(j) = 2.0 / (p * (p + 1) * pj * pj);
  }
  bary.resize(p + 1);
  for (int j = 0; j <= p; ++j) {
    double prod = 1.0;
    for (int k = 0; k <= p; ++k)
      if (k != j) prod *= nodes(j) - nodes(k);
    bary(j) = 1.0 / prod;
  }
  diff.setZero(p + 1, p + 1);
  for (int i = 0; i <= p; ++i) {
    double diag = 0.0;
    for (int j = 0; j <= p; ++j) {
      if (i == j) continue;
      diff(i, j) = bary(j) / bary(i) / (nodes(i) - nodes(j));
      diag -= diff(i, j);
    }
    diff(i, i) = diag;
  }
  // Cardinal functions in the Legendre basis, integrated term by term.
  Eigen::MatrixXd vander(p + 1, p + 1), prim(p + 1, p + 1);
  for (int i = 0; i <= p; ++i) {
    const double x = nodes(i);
    for (int k = 0; k <= p; ++k) {
      vander(i, k) = legendre_p(k, x);
      prim(i, k) = k == 0 ? x + 1.0 : (legendre_p(k + 1, x) - legendre_p(k - 1, x)) / (2 * k + 1);
    }
  }
  cumint = prim * vander.inverse();
}

RVec ReferenceElement::cardinal(double x) const {
  const int n = degree + 1;
  RVec out = RVec::Zero(n);
  for (int j = 0; j < n; ++j) {
    if (x == nodes(j)) {
      out(j) = 1.0;
      return out;
    }
  }
  double denom = 0.0;
  for (int j = 0; j < n; ++j) {
    out(j) = bary(j) / (x - nodes(j));
    denom += out(j);
  }
  return out / denom;
}

std::vector<double> graded_breaks(int elements, double core, double r_max) {
  require(elements >= 1, "need at least one element");
  require(core > 0 && r_max > 0, "grid radii must be positive");
  std::vector<double> b(elements + 1);
  if (core >= r_max) {
    for (int e = 0; e <= elements; ++e) b[e] = r_max * e / elements;
    return b;
  }
  // Equal log-density in the two regions: the element size at r = core matches
  // core / n_uniform, and geometric growth continues from there.
  int n_uniform = static_cast<int>(std::lround(elements / (1.0 + std::log(r_max / core))));
  n_uniform = std::clamp(n_uniform, 1, elements);
  const int n_geom = elements - n_uniform;
  const double h0 = core / n_uniform;
  if (n_geom == 0 || n_geom * h0 >= r_max - core) {
    for (int e = 0; e <= elements; ++e) b[e] = r_max * e / elements;
    return b;
  }
  auto excess = [&](double q) {
    double s = 0.0, term = h0;
    for (int j = 0; j < n_geom; ++j) {
      term *= q;
      s += term;
    }
    return s - (r_max - core);
  };
  double hi = 1.0 + 1e-3;
  while (excess(hi) < 0) hi = 1.0 + 2.0 * (hi - 1.0);
  std::uintmax_t iters = 200;
  auto root = boost::math::tools::toms748_solve(excess, 1.0, hi, boost::math::tools::eps_tolerance<double>(52), iters);
  const double q = 0.5 * (root.first + root.second);
  for (int e = 0; e <= n_uniform; ++e) b[e] = h0 * e;
  double h = h0;
  for (int e = n_uniform + 1; e <= elements; ++e) {
    h *= q;
    b[e] = b[e - 1] + h;
  }
  b[elements] = r_max;
  return b;
}

RadialGrid::RadialGrid(const GridSpec& spec) : spec_(spec), ref_(spec.degree) {
  require(spec.m >= 1, "equivariance index m must be >= 1");
  require(spec.n >= 5, "grid needs at least 5 nodes");
  require(spec.n % spec.degree == 0, "node count must be a multiple of the element degree");
  const int ne = spec.n / spec.degree;
  const int p = spec.degree;
  breaks_ = graded_breaks(ne, spec.core, spec.r_max);
  const int n = ne * p;
  r_.resize(n);
  dr_.setZero(n);
  share_.setZero(n);
  for (int e = 0; e < ne; ++e) {
    const double a = breaks_[e], he = h(e);
    for (int j = 0; j <= p; ++j) {
      const int g = e * p + j - 1;
      if (g < 0) continue;
      r_(g) = a + 0.5 * (ref_.nodes(j) + 1.0) * he;
      dr_(g) += 0.5 * he * ref_.weights(j);
      share_(g) += 1.0;
    }
    r_(e * p + p - 1) = breaks_[e + 1];
  }
  w_ = 2.0 * kPi * r_.cwiseProduct(dr_);
}

double RadialGrid::min_spacing() const {
  double s = r_(0);
  for (int i = 1; i < size(); ++i) s = std::min(s, r_(i) - r_(i - 1));
  return s;
}

template <class T>
T RadialGrid::integrate(const Vec<T>& f) const {
  require(f.size() == size(), "field length does not match grid");
  return (w_.cast<T>().array() * f.array()).sum();
}

double RadialGrid::inner(const CVec& f, const CVec& g) const {
  require(f.size() == size() && g.size() == size(), "field length does not match grid");
  double s = 0.0;
  for (int i = 0; i < size(); ++i) s += w_(i) * (f(i) * std::conj(g(i))).real();
  return s;
}

double RadialGrid::norm(const CVec& f) const { return std::sqrt(std::max(0.0, inner(f, f))); }

template <class T>
Vec<T> RadialGrid::deriv(const Vec<T>& f, T origin) const {
  require(f.size() == size(), "field length does not match grid");
  const int p = degree();
  Vec<T> out = Vec<T>::Zero(size());
  Vec<T> loc(p + 1);
  for (int e = 0; e < elements(); ++e) {
    for (int j = 0; j <= p; ++j) {
      const int g = e * p + j - 1;
      loc(j) = g < 0 ? origin : f(g);
    }
    const Vec<T> d = (ref_.diff.cast<T>() * loc) * T(2.0 / h(e));
    for (int j = 0; j <= p; ++j) {
      const int g = e * p + j - 1;
      if (g >= 0) out(g) += d(j);
    }
  }
  return out.array() / share_.cast<T>().array();
}

template <class T>
Vec<T> RadialGrid::cumulative(const Vec<T>& g, T origin) const {
  require(g.size() == size(), "field length does not match grid");
  const int p = degree();
  Vec<T> out(size());
  Vec<T> loc(p + 1);
  T base = T(0);
  for (int e = 0; e < elements(); ++e) {
    for (int j = 0; j <= p; ++j) {
      const int k = e * p + j - 1;
      loc(j) = k < 0 ? origin : g(k);
    }
    const Vec<T> seg = ref_.cumint.cast<T>() * loc * T(0.5 * h(e));
    for (int j = 1; j <= p; ++j) out(e * p + j - 1) = base + seg(j);
    base += seg(p);
  }
  return out;
}

template <class T>
Vec<T> RadialGrid::tail(const Vec<T>& g, T origin) const {
  require(g.size() == size(), "field length does not match grid");
  const int p = degree();
  Vec<T> out(size());
  Vec<T> loc(p + 1);
  T base = T(0);
  for (int e = elements() - 1; e >= 0; --e) {
    for (int j = 0; j <= p; ++j) {
      const int k = e * p + j - 1;
      loc(j) = k < 0 ? origin : g(k);
    }
    const Vec<T> seg = ref_.cumint.cast<T>() * loc * T(0.5 * h(e));
    for (int j = 1; j <= p; ++j) out(e * p + j - 1) = base + (seg(p) - seg(j));
    base += seg(p);
  }
  return out;
}

int RadialGrid::locate(double r) const {
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), r);
  int e = static_cast<int>(it - breaks_.begin()) - 1;
  return std::clamp(e, 0, elements() - 1);
}

template <class T>
Vec<T> RadialGrid::interpolate(const Vec<T>& f, const RVec& at, T origin) const {
  require(f.size() == size(), "field length does not match grid");
  const int p = degree();
  Vec<T> out = Vec<T>::Zero(at.size());
  Vec<T> loc(p + 1);
  for (int i = 0; i < at.size(); ++i) {
    const double r = at(i);
    if (r > r_max() * (1.0 + 1e-14) || r < 0) continue;
    const int e = locate(r);
    for (int j = 0; j <= p; ++j) {
      const int k = e * p + j - 1;
      loc(j) = k < 0 ? origin : f(k);
    }
    const double x = std::clamp(2.0 * (r - breaks_[e]) / h(e) - 1.0, -1.0, 1.0);
    out(i) = ref_.cardinal(x).cast<T>().dot(loc);
  }
  return out;
}

Eigen::SparseMatrix<double> RadialGrid::stiffness() const {
  const int p = degree();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(elements() * (p + 1) * (p + 1));
  for (int e = 0; e < elements(); ++e) {
    const double he = h(e);
    Eigen::MatrixXd de = ref_.diff * (2.0 / he);
    RVec wl(p + 1);
    for (int j = 0; j <= p; ++j) {
      const double rj = breaks_[e] + 0.5 * (ref_.nodes(j) + 1.0) * he;
      wl(j) = 2.0 * kPi * rj * ref_.weights(j) * 0.5 * he;
    }
    const Eigen::MatrixXd se = de.transpose() * wl.asDiagonal() * de;
    for (int i = 0; i <= p; ++i) {
      const int gi = e * p + i - 1;
      if (gi < 0) continue;
      for (int j = 0; j <= p; ++j) {
        const int gj = e * p + j - 1;
        if (gj < 0) continue;
        trip.emplace_back(gi, gj, se(i, j));
      }
    }
  }
  Eigen::SparseMatrix<double> s(size(), size());
  s.setFromTriplets(trip.begin(), trip.end());
  return s;
}

Eigen::MatrixXd RadialGrid::deriv_matrix() const {
  const int n = size(), p = degree();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int e = 0; e < elements(); ++e) {
    const double sc = 2.0 / h(e);
    for (int i = 0; i <= p; ++i) {
      const int gi = e * p + i - 1;
      if (gi < 0) continue;
      for (int j = 0; j <= p; ++j) {
        const int gj = e * p + j - 1;
        if (gj < 0) continue;
        d(gi, gj) += sc * ref_.diff(i, j) / share_(gi);
      }
    }
  }
  return d;
}

Eigen::MatrixXd RadialGrid::cumulative_matrix() const {
  const int n = size(), p = degree();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  RVec base = RVec::Zero(n);  // row of the running integral at the left break
  for (int e = 0; e < elements(); ++e) {
    const double sc = 0.5 * h(e);
    for (int i = 1; i <= p; ++i) {
      const int gi = e * p + i - 1;
      c.row(gi) = base.transpose();
      for (int j = 0; j <= p; ++j) {
        const int gj = e * p + j - 1;
        if (gj < 0) continue;
        c(gi, gj) += sc * ref_.cumint(i, j);
      }
    }
    base = c.row(e * p + p - 1).transpose();
  }
  return c;
}

template double RadialGrid::integrate<double>(const RVec&) const;
template cplx RadialGrid::integrate<cplx>(const CVec&) const;
template RVec RadialGrid::deriv<double>(const RVec&, double) const;
template CVec RadialGrid::deriv<cplx>(const CVec&, cplx) const;
template RVec RadialGrid::cumulative<double>(const RVec&, double) const;
template CVec RadialGrid::cumulative<cplx>(const CVec&, cplx) const;
template RVec RadialGrid::tail<double>(const RVec&, double) const;
template CVec RadialGrid::tail<cplx>(const CVec&, cplx) const;
template RVec RadialGrid::interpolate<double>(const RVec&, const RVec&, double) const;
template CVec RadialGrid::interpolate<cplx>(const CVec&, const RVec&, cplx) const;

GridPtr make_grid(const GridSpec& spec) { return std::make_shared<const RadialGrid>(spec); }

RadialField make_field(GridPtr grid, CVec values, std::optional<int> m_override) {
  require(grid != nullptr, "field has no grid");
  require(values.size() == grid->size(), "field length does not match grid");
  require(values.allFinite(), "field values must be finite");
  return {std::move(grid), std::move(values), m_override};
}

namespace {
void same_grid(const RadialField& f, const RadialField& g) {
  require(f.grid && f.grid == g.grid, "fields live on different grids");
}
}  // namespace

cplx integrate(const RadialField& f) { return f.grid->integrate(f.values); }

double inner_r(const RadialField& f, const RadialField& g) {
  same_grid(f, g);
  return f.grid->inner(f.values, g.values);
}

RadialField deriv_r(const RadialField& f) { return f.like(f.grid->deriv(f.values)); }

CVec lambda_op(const RadialGrid& g, const CVec& f) {
  return f + g.r().cast<cplx>().cwiseProduct(g.deriv(f));
}

RadialField lambda_op(const RadialField& f) { return f.like(lambda_op(*f.grid, f.values)); }

double norm_l2(const RadialField& f) { return f.grid->norm(f.values); }

double norm_h1m(const RadialGrid& g, const CVec& f, int index) {
  require(f.size() == g.size(), "field length does not match grid");
  const double fmax = f.cwiseAbs().maxCoeff();
  require(std::abs(f(0)) <= 1e-2 * fmax || fmax == 0.0,
          "field does not vanish at the origin; r^-1 f is not square integrable");
  const CVec fr = g.deriv(f);
  const CVec fo = f.cwiseQuotient(g.r().cast<cplx>());
  const double s = g.inner(fr, fr) + double(index) * index * g.inner(fo, fo);
  return std::sqrt(s);
}

double norm_h1m(const RadialField& f) { return norm_h1m(*f.grid, f.values, f.index()); }

}  // namespace csslab
