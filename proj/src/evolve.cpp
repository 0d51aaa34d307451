#include "csslab/evolve.hpp"

#include <cmath>

#include <lapacke.h>

#include "csslab/profiles.hpp"

namespace csslab {

namespace {

double w_norm(const RVec& w, const CVec& v) { return std::sqrt((w.array() * v.array().abs2()).sum()); }

}  // namespace

Propagator::Propagator(GridPtr g, int laplace_index, Potential potential, StepOptions opt)
    : g_(std::move(g)), pot_(std::move(potential)), opt_(opt) {
  require(opt_.max_iter >= 1, "Picard cap must be >= 1");
  require(opt_.tol > 0, "step tolerance must be positive");
  const int n = g_->size();
  band_ = g_->degree();
  s_ = g_->stiffness();
  const RVec& w = g_->w();
  const RVec& r = g_->r();
  for (int i = 0; i < n; ++i) s_.coeffRef(i, i) += double(laplace_index) * laplace_index * w(i) / (r(i) * r(i));
  s_.makeCompressed();
  // LAPACK general band layout: A(i, j) lives at row 2kl + i - j of column j.
  sband_ = Eigen::MatrixXd::Zero(3 * band_ + 1, n);
  for (int j = 0; j < s_.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(s_, j); it; ++it) {
      const int i = static_cast<int>(it.row());
      require(std::abs(i - j) <= band_, "stiffness exceeds the element bandwidth");
      sband_(2 * band_ + i - j, j) = it.value() / w(i);
    }
}

CVec Propagator::apply_laplacian(const CVec& u) const {
  return (s_.cast<cplx>() * u).cwiseQuotient(g_->w().cast<cplx>());
}

StepStats Propagator::step(CVec& u, double dt) {
  const int n = g_->size(), kl = band_;
  require(u.size() == n, "field does not match the propagator grid");
  require(std::isfinite(dt) && dt != 0.0, "time step must be finite and nonzero");
  const RVec& w = g_->w();
  const cplx half = 0.5 * kI * dt;
  const CVec ku = apply_laplacian(u);

  // Predictor: extrapolate the previous midpoint when continuing the same trajectory.
  CVec mid = u;
  if (last_out_.size() == n && last_dt_ * dt > 0 && (last_out_ - u).cwiseAbs().maxCoeff() == 0.0)
    mid = u + (dt / last_dt_) * (u - last_mid_);

  StepStats st;
  Eigen::MatrixXcd ab(3 * kl + 1, n);
  std::vector<lapack_int> piv(n);
  CVec next;
  for (int it = 0; it < opt_.max_iter; ++it) {
    const RVec v = pot_(mid);
    ab = half * sband_.cast<cplx>();
    ab.row(2 * kl).array() += 1.0 + half * v.array().cast<cplx>();
    next = u - half * (ku + v.cast<cplx>().cwiseProduct(u));
    const lapack_int info =
        LAPACKE_zgbsv(LAPACK_COL_MAJOR, n, kl, kl, 1, reinterpret_cast<lapack_complex_double*>(ab.data()),
                      3 * kl + 1, piv.data(), reinterpret_cast<lapack_complex_double*>(next.data()), n);
    if (info != 0) throw NumericalError("banded solve failed in the time step");
    const CVec nmid = 0.5 * (u + next);
    const double scale = w_norm(w, nmid);
    st.residual = scale > 0 ? w_norm(w, nmid - mid) / scale : w_norm(w, nmid - mid);
    st.iterations = it + 1;
    mid = nmid;
    if (st.residual <= opt_.tol) break;
  }
  st.converged = st.residual <= opt_.tol;
  if (!std::isfinite(st.residual) || st.residual > opt_.fail_tol)
    throw NumericalError("fixed-point iteration did not converge (residual " + std::to_string(st.residual) + ")");
  u = next;
  last_out_ = next;
  last_mid_ = mid;
  last_dt_ = dt;
  return st;
}

std::shared_ptr<Propagator> css_propagator(GridPtr g, int index, StepOptions opt) {
  const RadialGrid* gr = g.get();
  const bool tail = opt.close_tail;
  return std::make_shared<Propagator>(
      g, index, [gr, index, tail](const CVec& u) { return css_potential(*gr, u, index, tail); }, opt);
}

RVec z_external_potential(const RadialGrid& g, const CVec& z, bool close_tail) {
  const int m = g.m();
  const RVec& r = g.r();
  const RVec at = a_theta(g, z);
  RVec tail = g.tail<double>(z.cwiseAbs2().cwiseQuotient(r));
  if (close_tail) {
    bool ok = true;
    tail.array() += far_tail(g, z, ok);
  }
  const RVec r2 = r.cwiseAbs2();
  return (4.0 * (m + 1) * (1.0 - at.array()) / r2.array() + 2.0 * (m + 1) * tail.array()).matrix();
}

std::shared_ptr<Propagator> zcss_propagator(GridPtr g, ZMode mode, StepOptions opt) {
  const RadialGrid* gr = g.get();
  const int m = g->m();
  const bool tail = opt.close_tail;
  if (mode == ZMode::tilde) {
    const int mt = -(m + 2);
    return std::make_shared<Propagator>(
        g, mt, [gr, mt, tail](const CVec& z) { return css_potential(*gr, z, mt, tail); }, opt);
  }
  return std::make_shared<Propagator>(
      g, m,
      [gr, m, tail](const CVec& z) {
        return RVec(css_potential(*gr, z, m, tail) + z_external_potential(*gr, z, tail));
      },
      opt);
}

MonitorRecord monitors(const RadialGrid& g, const CVec& u, int index, double t) {
  MonitorRecord rec;
  rec.t = t;
  const RVec a2 = u.cwiseAbs2();
  const RVec& r = g.r();
  rec.mass = g.integrate<double>(a2);
  rec.energy = energy_forms(g, u, index).bogomolnyi;
  const CVec ur = g.deriv(u);
  rec.phi = 0.5 * g.integrate<double>((u.conjugate().array() * ur.array()).imag().matrix().cwiseProduct(r));
  rec.weighted_mass = g.integrate<double>(a2.cwiseProduct(r.cwiseAbs2()));
  const int k = g.size() - 1;
  rec.flux = 2.0 * kPi * r(k) * 2.0 * (std::conj(u(k)) * ur(k)).imag();
  return rec;
}

EvolutionState make_state(const RadialField& u, double t, StepOptions opt) {
  require(u.grid != nullptr, "field has no grid");
  EvolutionState s;
  s.t = t;
  s.u = u;
  s.gauge = gauge_data(*u.grid, u.values, u.index(), opt.close_tail);
  s.stepper = css_propagator(u.grid, u.index(), opt);
  return s;
}

EvolutionState step_css(EvolutionState s, double dt) {
  if (!s.stepper) s.stepper = css_propagator(s.u.grid, s.u.index());
  require(&s.stepper->grid() == s.u.grid.get(), "stepper and field live on different grids");
  s.last = s.stepper->step(s.u.values, dt);
  if (!s.last.converged) ++s.unconverged_steps;
  s.t += dt;
  s.gauge = gauge_data(*s.u.grid, s.u.values, s.u.index(), s.stepper->options().close_tail);
  return s;
}

MonitorRecord monitors(const EvolutionState& s) { return monitors(*s.u.grid, s.u.values, s.u.index(), s.t); }

ZState make_zstate(const RadialField& z, double t, ZMode mode, StepOptions opt) {
  require(z.grid != nullptr, "field has no grid");
  ZState s;
  s.t = t;
  s.z = z;
  s.authoritative = mode;
  s.stepper = zcss_propagator(z.grid, mode, opt);
  return s;
}

ZState step_zcss(ZState s, double dt, ZMode mode) {
  if (!s.stepper || mode != s.authoritative) {
    const StepOptions opt = s.stepper ? s.stepper->options() : StepOptions{};
    s.stepper = zcss_propagator(s.z.grid, mode, opt);
    s.authoritative = mode;
  }
  s.last = s.stepper->step(s.z.values, dt);
  s.t += dt;
  return s;
}

ExactModulation exact_modulation(double t, double eta, double theta_eta) {
  ExactModulation e;
  e.lambda = std::sqrt(t * t + eta * eta);
  e.b = -t;
  e.gamma = eta > 0 ? theta_eta * std::atan(t / eta) : 0.0;
  return e;
}

CVec modulated_profile(const RadialGrid& g, int m, double eta, double theta_eta, double t, double tol) {
  const ExactModulation e = exact_modulation(t, eta, theta_eta);
  require(e.lambda > 0, "modulated profile needs lambda > 0");
  const RVec y = g.r() / e.lambda;
  const RVec q = QEtaShooter(m, eta, tol).q_at(y);
  CVec out(g.size());
  for (int i = 0; i < g.size(); ++i)
    out(i) = std::exp(kI * (e.gamma - 0.25 * e.b * y(i) * y(i))) * q(i) / e.lambda;
  return out;
}

ExactTrackReport evolve_modulated_exact(double eta, double t0, double t1, double dt, GridPtr g, int samples,
                                        StepOptions opt) {
  require(eta >= 0, "eta must be nonnegative (sign condition)");
  require(t1 > t0 && dt > 0, "need t1 > t0 and dt > 0");
  require(eta > 0 || t1 < 0, "the eta = 0 family is singular at t = 0");
  require(samples >= 1, "need at least one sample");
  const int m = g->m();
  ExactTrackReport rep;
  rep.eta = eta;
  rep.theta_eta = QEtaShooter(m, eta).theta_from_connection();
  EvolutionState s = make_state(make_field(g, modulated_profile(*g, m, eta, rep.theta_eta, t0)), t0, opt);
  const double m0 = g->integrate<double>(s.u.values.cwiseAbs2());
  const long steps = std::lround((t1 - t0) / dt);
  require(steps >= 1, "time span shorter than one step");
  const double h = (t1 - t0) / steps;
  long next_sample = 1;
  for (long k = 1; k <= steps; ++k) {
    s = step_css(std::move(s), h);
    if (k * samples >= next_sample * steps) {
      ++next_sample;
      const double t = t0 + k * h;
      const CVec ex = modulated_profile(*g, m, eta, rep.theta_eta, t);
      TrackPoint p;
      p.t = t;
      p.rel_error = g->norm(s.u.values - ex) / g->norm(ex);
      p.mass_drift = g->integrate<double>(s.u.values.cwiseAbs2()) / m0 - 1.0;
      rep.max_rel_error = std::max(rep.max_rel_error, p.rel_error);
      rep.points.push_back(p);
    }
  }
  return rep;
}

}  // namespace csslab
