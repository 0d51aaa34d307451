#include "csslab/gauge.hpp"

#include <cmath>
#include <cstring>

namespace csslab {

std::uint64_t checksum(const CVec& v) {
  // FNV-1a over the raw bytes.
  std::uint64_t h = 1469598103934665603ull;
  const auto* p = reinterpret_cast<const unsigned char*>(v.data());
  const std::size_t n = static_cast<std::size_t>(v.size()) * sizeof(cplx);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

RVec re_prod(const CVec& a, const CVec& b) { return (a.array() * b.conjugate().array()).real(); }

RVec cum_r(const RadialGrid& g, const RVec& f) { return g.cumulative<double>(f.cwiseProduct(g.r())); }

CVec scale(const RVec& s, const CVec& v) { return s.cast<cplx>().cwiseProduct(v); }

// int_{r_max}^inf |u|^2 dr / r, assuming |u|^2 ~ r^-p past the last element.
double power_tail(const RadialGrid& g, const CVec& u, bool& converges) {
  converges = true;
  const int n = g.size(), p = g.degree();
  const double a2 = std::norm(u(n - 1));
  if (a2 < 1e-300) return 0.0;
  const int k = n - 1 - p;
  const double b2 = std::norm(u(k));
  const double pw = -std::log(a2 / b2) / std::log(g.r()(n - 1) / g.r()(k));
  if (!std::isfinite(pw) || pw <= 1.0) {
    converges = false;
    return 0.0;
  }
  return a2 / pw;
}

}  // namespace

double far_tail(const RadialGrid& g, const CVec& u, bool& converges) { return power_tail(g, u, converges); }

RVec a_theta(const RadialGrid& g, const CVec& u) { return -0.5 * cum_r(g, u.cwiseAbs2()); }

RVec a_zero(const RadialGrid& g, const CVec& u, const RVec& at, int index, bool close_tail) {
  const RVec integrand = (at.array() + index) * u.cwiseAbs2().array() / g.r().array();
  RVec a0 = -g.tail<double>(integrand);
  if (close_tail) {
    bool ok = true;
    const double t = power_tail(g, u, ok);
    a0.array() -= (index + at(g.size() - 1)) * t;
  }
  return a0;
}

GaugeData gauge_data(const RadialGrid& g, const CVec& u, int index, bool close_tail) {
  GaugeData d;
  d.a_theta = a_theta(g, u);
  const RVec integrand = (d.a_theta.array() + index) * u.cwiseAbs2().array() / g.r().array();
  d.a_zero = -g.tail<double>(integrand);
  if (close_tail) {
    const double t = power_tail(g, u, d.tail_converges);
    d.tail = -(index + d.a_theta(g.size() - 1)) * t;
    d.a_zero.array() += d.tail;
  }
  d.checksum = checksum(u);
  return d;
}

RVec css_potential(const RadialGrid& g, const CVec& u, int index, bool close_tail) {
  const GaugeData d = gauge_data(g, u, index, close_tail);
  const RVec r2 = g.r().cwiseAbs2();
  return ((2.0 * index) * d.a_theta.array() + d.a_theta.array().square()) / r2.array() + d.a_zero.array() -
         u.cwiseAbs2().array();
}

CVec nonlinearity(const RadialGrid& g, const CVec& u, int index, bool close_tail) {
  return scale(css_potential(g, u, index, close_tail), u);
}

RadialField nonlinearity(const RadialField& u) {
  return u.like(nonlinearity(*u.grid, u.values, u.index()));
}

CVec n30(const RadialGrid&, const CVec& p1, const CVec& p2, const CVec& p3) {
  return -(p1.array() * p2.conjugate().array() * p3.array()).matrix();
}

CVec n31(const RadialGrid& g, int index, const CVec& p1, const CVec& p2, const CVec& p3) {
  const RVec c = cum_r(g, re_prod(p1, p2));
  return scale(-double(index) * c.cwiseQuotient(g.r().cwiseAbs2()), p3);
}

CVec n32(const RadialGrid& g, int index, const CVec& p1, const CVec& p2, const CVec& p3) {
  const RVec t = g.tail<double>(re_prod(p1, p2).cwiseQuotient(g.r()));
  return scale(-double(index) * t, p3);
}

CVec n51(const RadialGrid& g, const CVec& p1, const CVec& p2, const CVec& p3, const CVec& p4, const CVec& p5) {
  const RVec c12 = cum_r(g, re_prod(p1, p2));
  const RVec c34 = cum_r(g, re_prod(p3, p4));
  return scale(0.25 * c12.cwiseProduct(c34).cwiseQuotient(g.r().cwiseAbs2()), p5);
}

CVec n52(const RadialGrid& g, const CVec& p1, const CVec& p2, const CVec& p3, const CVec& p4, const CVec& p5) {
  const RVec c12 = cum_r(g, re_prod(p1, p2));
  const RVec t = g.tail<double>(c12.cwiseProduct(re_prod(p3, p4)).cwiseQuotient(g.r()));
  return scale(0.5 * t, p5);
}

namespace {

// Quintic bridge for phi' on [1,2], in powers of s = r - 1.
struct Bridge {
  double c[6];
  Bridge() {
    const double e2 = std::exp(-2.0);
    c[0] = 1.0;
    c[1] = 1.0;
    c[2] = 0.0;
    const double v = 3.0 - e2 - (c[0] + c[1] + c[2]);
    const double d = e2 - (c[1] + 2 * c[2]);
    const double s = -e2 - 2 * c[2];
    Eigen::Matrix3d a;
    a << 1, 1, 1, 3, 4, 5, 6, 12, 20;
    const Eigen::Vector3d x = a.lu().solve(Eigen::Vector3d(v, d, s));
    c[3] = x(0);
    c[4] = x(1);
    c[5] = x(2);
  }
  // derivs[k] = d^k/ds^k of phi'
  void eval(double s, double* out) const {
    for (int k = 0; k < 4; ++k) {
      double acc = 0.0;
      for (int j = 5; j >= k; --j) {
        double coef = c[j];
        for (int q = 0; q < k; ++q) coef *= (j - q);
        acc = acc * s + coef;
      }
      out[k] = acc;
    }
  }
  double primitive(double s) const {
    double acc = 0.0;
    for (int j = 5; j >= 0; --j) acc = acc * s + c[j] / (j + 1);
    return acc * s;
  }
};

const Bridge& bridge() {
  static const Bridge b;
  return b;
}

// phi and its derivatives up to order 4 at rho (unscaled profile).
void phi_unscaled(double rho, double* d) {
  if (rho <= 1.0) {
    d[0] = 0.5 * rho * rho;
    d[1] = rho;
    d[2] = 1.0;
    d[3] = 0.0;
    d[4] = 0.0;
  } else if (rho < 2.0) {
    double q[4];
    bridge().eval(rho - 1.0, q);
    d[0] = 0.5 + bridge().primitive(rho - 1.0);
    for (int k = 0; k < 4; ++k) d[k + 1] = q[k];
  } else {
    const double e = std::exp(-rho);
    const double phi2 = 0.5 + bridge().primitive(1.0);
    d[0] = phi2 + 3.0 * (rho - 2.0) - (e - std::exp(-2.0));
    d[1] = 3.0 - e;
    d[2] = e;
    d[3] = -e;
    d[4] = e;
  }
}

}  // namespace

WeightPoint virial_weight_at(double r, double A) {
  WeightPoint p{};
  if (std::isinf(A)) {
    p.phi = 0.5 * r * r;
    p.dphi = r;
    p.ddphi = 1.0;
    p.lap = 2.0;
    p.bilap = 0.0;
    return p;
  }
  require(A >= 1.0, "virial cutoff A must be >= 1");
  double d[5];
  const double rho = r / A;
  phi_unscaled(rho, d);
  p.phi = A * A * d[0];
  p.dphi = A * d[1];
  p.ddphi = d[2];
  p.lap = d[2] + d[1] / rho;
  p.bilap = (d[4] + 2.0 * d[3] / rho - d[2] / (rho * rho) + d[1] / (rho * rho * rho)) / (A * A);
  return p;
}

VirialWeight virial_weight(const RadialGrid& g, double A) {
  VirialWeight w;
  w.A = A;
  const int n = g.size();
  w.phi.resize(n);
  w.dphi.resize(n);
  w.lap.resize(n);
  w.bilap.resize(n);
  for (int i = 0; i < n; ++i) {
    const WeightPoint p = virial_weight_at(g.r()(i), A);
    w.phi(i) = p.phi;
    w.dphi(i) = p.dphi;
    w.lap(i) = p.lap;
    w.bilap(i) = p.bilap;
  }
  return w;
}

double form_m40(const RadialGrid& g, const VirialWeight& w, const CVec& p1, const CVec& p2, const CVec& p3,
                const CVec& p4) {
  const CVec prod = (p1.array() * p2.conjugate().array() * p3.array() * p4.conjugate().array()).matrix();
  return g.integrate<double>((0.5 * w.lap).cwiseProduct(prod.real()));
}

double form_m41(const RadialGrid& g, const VirialWeight& w, const CVec& p1, const CVec& p2, const CVec& p3,
                const CVec& p4) {
  const RVec r3 = g.r().array().cube();
  const RVec c12 = cum_r(g, re_prod(p1, p2));
  return g.integrate<double>(
      (w.dphi.array() * c12.array() * re_prod(p3, p4).array() / r3.array()).matrix());
}

double form_m6(const RadialGrid& g, const VirialWeight& w, const CVec& p1, const CVec& p2, const CVec& p3,
               const CVec& p4, const CVec& p5, const CVec& p6) {
  const RVec r3 = g.r().array().cube();
  const RVec c12 = cum_r(g, re_prod(p1, p2));
  const RVec c34 = cum_r(g, re_prod(p3, p4));
  return g.integrate<double>(
      (w.dphi.array() * c12.array() * c34.array() * re_prod(p5, p6).array() / r3.array()).matrix());
}

FormsM forms_M(const RadialGrid& g, double A, const CVec& u) {
  const VirialWeight w = virial_weight(g, A);
  return {form_m40(g, w, u, u, u, u), form_m41(g, w, u, u, u, u), form_m6(g, w, u, u, u, u, u, u)};
}

CVec bogomolnyi(const RadialGrid& g, const CVec& u, int index) {
  const RVec at = a_theta(g, u);
  return g.deriv(u) - scale((at.array() + index).matrix().cwiseQuotient(g.r()), u);
}

EnergyForms energy_forms(const RadialGrid& g, const CVec& u, int index) {
  EnergyForms e;
  const CVec du = bogomolnyi(g, u, index);
  e.bogomolnyi = 0.5 * g.inner(du, du);
  const CVec ur = g.deriv(u);
  const CVec uo = u.cwiseQuotient(g.r().cast<cplx>());
  e.kinetic = 0.5 * (g.inner(ur, ur) + double(index) * index * g.inner(uo, uo));
  const FormsM f = forms_M(g, std::numeric_limits<double>::infinity(), u);
  e.expanded = e.kinetic - 0.25 * f.m40 - 0.5 * index * f.m41 + 0.125 * f.m6;
  return e;
}

double energy(const RadialField& u, double tol) {
  const EnergyForms e = energy_forms(*u.grid, u.values, u.index());
  if (std::abs(e.bogomolnyi - e.expanded) > tol * std::max(e.kinetic, 1e-300))
    throw NumericalError("energy forms disagree: " + std::to_string(e.bogomolnyi) + " vs " +
                         std::to_string(e.expanded));
  return e.bogomolnyi;
}

}  // namespace csslab
