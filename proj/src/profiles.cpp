#include "csslab/profiles.hpp"

#include <array>
#include <cmath>

#include <boost/numeric/odeint.hpp>

#include "csslab/gauge.hpp"
#include "csslab/linops.hpp"

namespace csslab {

double q_value(int m, double r) {
  const double p = std::pow(r, 2 * m + 2);
  return std::sqrt(8.0) * (m + 1) * std::pow(r, m) / (1.0 + p);
}

double q_deriv(int m, double r) {
  if (r == 0.0) return m == 1 ? std::sqrt(8.0) * 2 : 0.0;
  const double p = std::pow(r, 2 * m + 2);
  return q_value(m, r) * (m - 2.0 * (m + 1) * p / (1.0 + p)) / r;
}

double rq_norm_sq(int m) { return 8.0 * kPi * kPi / std::sin(kPi / (m + 1)); }

double psi_norm_sq(int m) { return 2.0 * kPi * kPi / ((m + 1.0) * (m + 1.0) * std::sin(kPi / (m + 1))); }

RadialField q_profile(GridPtr g) {
  CVec v(g->size());
  for (int i = 0; i < g->size(); ++i) v(i) = q_value(g->m(), g->r()(i));
  return make_field(g, v);
}

RadialField lambda_q_profile(GridPtr g) {
  CVec v(g->size());
  const int m = g->m();
  for (int i = 0; i < g->size(); ++i) {
    const double r = g->r()(i), p = std::pow(r, 2 * m + 2);
    v(i) = q_value(m, r) * (1.0 + m - 2.0 * (m + 1) * p / (1.0 + p));
  }
  return make_field(g, v);
}

CVec pseudoconformal_phase(const RadialGrid& g, const CVec& f, double b) {
  CVec out(f.size());
  for (int i = 0; i < f.size(); ++i) {
    const double r = g.r()(i);
    out(i) = f(i) * std::exp(-kI * (0.25 * b * r * r));
  }
  return out;
}

RadialField pseudoconformal_phase(const RadialField& f, double b) {
  return f.like(pseudoconformal_phase(*f.grid, f.values, b));
}

RadialField s_explicit(double t, GridPtr g) {
  require(t < 0, "explicit blow-up solution needs t < 0");
  const double a = std::abs(t);
  CVec v(g->size());
  for (int i = 0; i < g->size(); ++i) {
    const double r = g->r()(i);
    v(i) = q_value(g->m(), r / a) / a * std::exp(-kI * (r * r / (4.0 * a)));
  }
  return make_field(g, v);
}

RadialField psi_profile(GridPtr g) {
  CVec v(g->size());
  const int m = g->m();
  for (int i = 0; i < g->size(); ++i) {
    const double r = g->r()(i);
    v(i) = r * q_value(m, r) / (2.0 * (m + 1));
  }
  return make_field(g, v);
}

RhoSolution rho_solve(GridPtr gp) {
  const RadialGrid& g = *gp;
  const int m = g.m(), p = g.degree();
  const Eigen::MatrixXd& cum = g.reference().cumint;
  RVec rt = RVec::Zero(g.size());
  double i_base = 0.0, j_base = 0.0, prev = 0.0;  // I, J and rho~ at the left break
  // Per element: rho~ + J = r^2/(4(m+1)), J = int I / s, I = int Q^2 rho~ s.
  for (int e = 0; e < g.elements(); ++e) {
    const double hh = 0.5 * g.h(e);
    RVec s(p + 1), qs(p + 1), inv_s(p + 1);
    for (int j = 0; j <= p; ++j) {
      const int k = e * p + j - 1;
      s(j) = k < 0 ? 0.0 : g.r()(k);
      const double q = q_value(m, s(j));
      qs(j) = q * q * s(j);
      inv_s(j) = s(j) > 0 ? 1.0 / s(j) : 0.0;
    }
    const Eigen::MatrixXd a1 = hh * cum * qs.asDiagonal();
    const Eigen::MatrixXd a2 = hh * cum * inv_s.asDiagonal();
    const Eigen::MatrixXd k = Eigen::MatrixXd::Identity(p + 1, p + 1) + a2 * a1;
    const RVec ones = RVec::Ones(p + 1);
    const RVec rhs_full =
        (s.array().square() / (4.0 * (m + 1))).matrix() - j_base * ones - i_base * (a2 * ones);
    // Node 0 is known; solve for nodes 1..p.
    const Eigen::MatrixXd kk = k.bottomRightCorner(p, p);
    const RVec rhs = rhs_full.tail(p) - k.col(0).tail(p) * prev;
    const RVec x = kk.partialPivLu().solve(rhs);
    RVec full(p + 1);
    full(0) = prev;
    full.tail(p) = x;
    const RVec ivals = i_base * ones + a1 * full;
    const RVec jvals = j_base * ones + a2 * ivals;
    for (int j = 1; j <= p; ++j) rt(e * p + j - 1) = full(j);
    i_base = ivals(p);
    j_base = jvals(p);
    prev = full(p);
  }
  const RadialField q = q_profile(gp);
  return {make_field(gp, q.values.cwiseProduct(rt.cast<cplx>())), rt};
}

namespace {

// log h with h = P / r^m, and a = A_theta. The log keeps the far-field decay
// of h at uniform relative accuracy.
using OdeState = std::array<double, 2>;

struct QEtaSystem {
  int m;
  double eta;
  void operator()(const OdeState& x, OdeState& dx, double r) const {
    if (r == 0.0) {
      dx = {0.0, 0.0};
      return;
    }
    dx[0] = x[1] / r;
    dx[1] = -0.5 * r * std::exp(2.0 * (m * std::log(r) + x[0]) - 0.5 * eta * r * r);
  }
};

template <class Observer>
void integrate_qeta(int m, double eta, double tol, const std::vector<double>& times, Observer obs) {
  namespace ode = boost::numeric::odeint;
  OdeState x{std::log(std::sqrt(8.0) * (m + 1)), 0.0};
  auto stepper = ode::make_dense_output(tol, tol, ode::runge_kutta_dopri5<OdeState>());
  ode::integrate_times(stepper, QEtaSystem{m, eta}, x, times.begin(), times.end(), 1e-4, obs);
}

}  // namespace

QEtaShooter::QEtaShooter(int m, double eta, double tol) : m_(m), eta_(eta), tol_(tol) {
  require(m >= 1, "m must be >= 1");
  require(eta >= 0, "eta must be nonnegative (sign condition)");
  require(tol > 0, "tolerance must be positive");
}

RVec QEtaShooter::p_at(const RVec& radii) const {
  const int n = static_cast<int>(radii.size());
  RVec out = RVec::Zero(n);
  if (n == 0) return out;
  std::vector<double> times;
  times.reserve(n + 1);
  times.push_back(0.0);
  for (int i = 0; i < n; ++i) {
    require(radii(i) >= times.back(), "radii must be sorted and nonnegative");
    times.push_back(radii(i));
  }
  int k = -1;
  bool blown = false;
  integrate_qeta(m_, eta_, tol_ / 10.0, times, [&](const OdeState& x, double r) {
    if (k >= 0) {
      out(k) = r > 0 ? std::exp(m_ * std::log(r) + x[0]) : 0.0;
      if (!std::isfinite(out(k))) blown = true;
    }
    ++k;
  });
  if (blown) throw NumericalError("modified profile P blows up before r_max");
  return out;
}

RVec QEtaShooter::q_at(const RVec& radii) const {
  // Fold the Gaussian into the exponent so far radii underflow cleanly.
  const int n = static_cast<int>(radii.size());
  RVec out = RVec::Zero(n);
  std::vector<double> times{0.0};
  for (int i = 0; i < n; ++i) {
    require(radii(i) >= times.back(), "radii must be sorted and nonnegative");
    times.push_back(radii(i));
  }
  int k = -1;
  integrate_qeta(m_, eta_, tol_ / 10.0, times, [&](const OdeState& x, double r) {
    if (k >= 0 && r > 0) out(k) = std::exp(m_ * std::log(r) + x[0] - 0.25 * eta_ * r * r);
    ++k;
  });
  if (!out.allFinite()) throw NumericalError("modified profile blows up before r_max");
  return out;
}

double QEtaShooter::theta_from_connection() const {
  // a converges once the Gaussian factor is negligible; for eta = 0 use a far radius.
  const double rfar = eta_ > 0 ? std::sqrt(80.0 / eta_) : 1e6;
  double a_inf = 0.0;
  std::vector<double> times{0.0, rfar};
  integrate_qeta(m_, eta_, tol_ / 10.0, times, [&](const OdeState& x, double) { a_inf = x[1]; });
  return -a_inf - (m_ + 1);
}

CVec second_order_residual(const RadialGrid& g, const CVec& q, double eta, double theta) {
  const int m = g.m();
  const CVec dq = d_plus(g, q, q, m);
  const CVec lhs = l_w_star(g, q, dq, m);
  const RVec r2 = g.r().cwiseAbs2();
  return lhs + (eta * theta) * q + (0.25 * eta * eta * r2).cast<cplx>().cwiseProduct(q);
}

QEtaSolution q_eta_solve(GridPtr g, double eta, double B, double tol) {
  require(eta >= 0, "eta must be nonnegative (sign condition)");
  require(B >= 1, "shooting constant B must be >= 1");
  const QEtaShooter sh(g->m(), eta, tol);
  const RVec p = sh.p_at(g->r());
  const RVec q = (p.array() * (-0.25 * eta * g->r().array().square()).exp()).matrix();
  QEtaSolution s;
  s.q_eta = make_field(g, q.cast<cplx>());
  s.p_eta = make_field(g, p.cast<cplx>());
  s.theta_eta = g->integrate<double>(q.cwiseAbs2()) / (4.0 * kPi) - (g->m() + 1);
  s.theta_ode = sh.theta_from_connection();
  s.r_eta = eta > 0 ? 1.0 / std::sqrt(B * eta) : std::numeric_limits<double>::infinity();
  const CVec res = second_order_residual(*g, s.q_eta.values, eta, s.theta_eta);
  s.residual = g->norm(res);
  s.residual_rel = s.residual / g->norm(s.q_eta.values);
  return s;
}

ProfileBundle build_profiles(GridPtr g, double eta, double B, double tol) {
  ProfileBundle b;
  b.m = g->m();
  b.eta = eta;
  b.B = B;
  b.Q = q_profile(g);
  b.LambdaQ = lambda_q_profile(g);
  b.psi = psi_profile(g);
  RhoSolution rs = rho_solve(g);
  b.rho = rs.rho;
  b.rho_tilde = rs.rho_tilde;
  QEtaSolution qs = q_eta_solve(g, eta, B, tol);
  b.Q_eta = qs.q_eta;
  b.P_eta = qs.p_eta;
  b.theta_eta = qs.theta_eta;
  b.R_eta = qs.r_eta;
  b.q_eta_residual = qs.residual;
  return b;
}

}  // namespace csslab
