#include "csslab/modulation.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <future>
#include <limits>

#include "csslab/gauge.hpp"
#include "csslab/io.hpp"
#include "csslab/linops.hpp"

namespace csslab {

namespace {

double h1_seminorm(const RadialGrid& g, const CVec& f, int index) {
  const CVec fr = g.deriv(f);
  const RVec r2 = g.r().cwiseAbs2();
  const RVec dens = fr.cwiseAbs2() + double(index) * index * f.cwiseAbs2().cwiseQuotient(r2);
  return std::sqrt(g.integrate<double>(dens));
}

double real_inner(const RadialGrid& g, const CVec& f, const CVec& h) {
  return (g.w().array() * (f.array() * h.conjugate().array()).real()).sum();
}

// Derivative at x2 of the quadratic through (x0, f0), (x1, f1), (x2, f2).
double three_point_slope(double x0, double x1, double x2, double f0, double f1, double f2) {
  return f0 * (x2 - x1) / ((x0 - x1) * (x0 - x2)) + f1 * (x2 - x0) / ((x1 - x0) * (x1 - x2)) +
         f2 * (1.0 / (x2 - x0) + 1.0 / (x2 - x1));
}

}  // namespace

int nodes_within(const RadialGrid& g, double scale) {
  const RVec& r = g.r();
  return static_cast<int>(std::upper_bound(r.data(), r.data() + r.size(), scale) - r.data());
}

RadialField sharp(const RadialField& f, double lambda, double gamma) {
  require(lambda > 0 && std::isfinite(lambda), "lambda must be positive");
  const RadialGrid& g = *f.grid;
  if (nodes_within(g, lambda) < 4) warn("sharp: profile scale lambda is under-resolved by the grid");
  const CVec v = g.interpolate<cplx>(f.values, g.r() / lambda);
  return f.like(v * (std::exp(kI * gamma) / lambda));
}

RadialField flat(const RadialField& h, double lambda, double gamma) {
  require(lambda > 0 && std::isfinite(lambda), "lambda must be positive");
  const RadialGrid& g = *h.grid;
  if (nodes_within(g, 1.0 / lambda) < 4) warn("flat: rescaled field is under-resolved by the grid");
  const CVec v = g.interpolate<cplx>(h.values, g.r() * lambda);
  return h.like(v * (lambda * std::exp(-kI * gamma)));
}

Decomposer::Decomposer(GridPtr g, double eta, double tol)
    : g_(std::move(g)), eta_(eta), tol_(tol), shooter_(g_->m(), eta), z_(default_z_pair(g_)) {
  require(tol > 0, "decomposition tolerance must be positive");
  theta_ = shooter_.theta_from_connection();
}

const RVec& Decomposer::q_scaled(double lambda) const {
  if (lambda != cached_lambda_) {
    cached_q_ = shooter_.q_at(g_->r() / lambda);
    cached_lambda_ = lambda;
  }
  return cached_q_;
}

CVec Decomposer::profile_sharp(const ModulationParams& p) const {
  const RVec& q = q_scaled(p.lambda);
  CVec out(g_->size());
  for (int i = 0; i < g_->size(); ++i) {
    const double y = g_->r()(i) / p.lambda;
    out(i) = std::exp(kI * (p.gamma - 0.25 * p.b * y * y)) * q(i) / p.lambda;
  }
  return out;
}

void Decomposer::ortho(const CVec& d, const ModulationParams& p, double out[2]) const {
  double re = 0, im = 0;
  const RVec& w = g_->w();
  for (int i = 0; i < g_->size(); ++i) {
    const double y = g_->r()(i) / p.lambda;
    const double bv = bump(y);
    if (bv == 0.0) continue;
    const cplx ph = std::exp(kI * (p.gamma - 0.25 * p.b * y * y)) * (bv / p.lambda);
    re += w(i) * (d(i) * std::conj(ph * z_.re_scale)).real();
    im += w(i) * (d(i) * std::conj(kI * ph * z_.im_scale)).real();
  }
  out[0] = re;
  out[1] = im;
}

double midpoint_law_residual(const LawAnchor& prev, const LawAnchor& cur, double eta) {
  const double dt = cur.t - prev.t;
  require(dt != 0.0, "law samples must have distinct times");
  const double mu = cur.lambda * cur.lambda, mup = prev.lambda * prev.lambda;
  const double bm = 0.5 * (cur.b + prev.b), mum = 0.5 * (mu + mup);
  return (mu - mup) / dt * bm + bm * bm - mum * (cur.b - prev.b) / dt - eta * eta;
}

double Decomposer::law_residual(double t, const ModulationParams& p, const std::vector<LawAnchor>& history,
                                const ModulationParams& guess) const {
  if (eta_ == 0.0) {
    require(t != 0.0, "the eta = 0 law is singular at t = 0");
    return p.b + p.lambda * p.lambda / t;
  }
  const LawAnchor cur{t, p.b, p.lambda};
  if (history.size() >= 2) {
    const LawAnchor& a0 = history[history.size() - 2];
    const LawAnchor& a1 = history.back();
    const double mu = p.lambda * p.lambda;
    const double mu_t =
        three_point_slope(a0.t, a1.t, t, a0.lambda * a0.lambda, a1.lambda * a1.lambda, mu);
    const double b_t = three_point_slope(a0.t, a1.t, t, a0.b, a1.b, p.b);
    return mu_t * p.b + p.b * p.b - mu * b_t - eta_ * eta_;
  }
  if (history.size() == 1) return midpoint_law_residual(history.back(), cur, eta_);
  return p.b - guess.b;
}

Decomposition Decomposer::operator()(const CVec& umz, double t, const ModulationParams& guess,
                                     const std::vector<LawAnchor>& history) const {
  require(umz.size() == g_->size(), "field does not match the decomposition grid");
  require(guess.lambda > 0, "initial lambda must be positive");
  auto eval = [&](const ModulationParams& p) {
    const CVec d = umz - profile_sharp(p);
    double o[2];
    ortho(d, p, o);
    return Eigen::Vector3d(o[0], o[1], law_residual(t, p, history, guess));
  };
  auto add = [](ModulationParams p, const Eigen::Vector3d& d) {
    p.b += d(0);
    p.lambda += d(1);
    p.gamma += d(2);
    return p;
  };
  ModulationParams p = guess;
  Eigen::Vector3d f = eval(p);
  int it = 0;
  for (; it < 60 && f.cwiseAbs().maxCoeff() > tol_; ++it) {
    Eigen::Matrix3d jac;
    const double steps[3] = {1e-6, 1e-6 * p.lambda, 1e-6};
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d e = Eigen::Vector3d::Zero();
      e(k) = steps[k];
      jac.col(k) = (eval(add(p, e)) - eval(add(p, -e))) / (2.0 * steps[k]);
    }
    Eigen::Vector3d dp = jac.fullPivLu().solve(-f);
    if (!dp.allFinite()) throw NumericalError("decomposition lost: singular Jacobian");
    // Backtrack to keep lambda positive and the residual decreasing.
    double s = 1.0;
    ModulationParams trial = add(p, s * dp);
    Eigen::Vector3d ft;
    for (int k = 0; k < 30; ++k) {
      if (trial.lambda > 0) {
        ft = eval(trial);
        if (ft.cwiseAbs().maxCoeff() < f.cwiseAbs().maxCoeff() || s < 1e-3) break;
      }
      s *= 0.5;
      trial = add(p, s * dp);
    }
    if (!(trial.lambda > 0)) throw NumericalError("decomposition lost: lambda left (0, inf)");
    const bool stalled = (s * dp).cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + std::abs(p.lambda));
    p = trial;
    f = ft;
    if (stalled) break;
  }
  if (!(f.cwiseAbs().maxCoeff() <= 1e-10))
    throw NumericalError("decomposition lost: residual " + std::to_string(f.cwiseAbs().maxCoeff()) + " at t = " +
                         std::to_string(t));
  // Nearest branch to the guess.
  p.gamma += 2.0 * kPi * std::round((guess.gamma - p.gamma) / (2.0 * kPi));
  Decomposition out;
  out.p = p;
  out.iterations = it;
  out.eps_sharp = umz - profile_sharp(p);
  out.ortho_residual = std::abs(f(0)) + std::abs(f(1));
  out.law_residual = f(2);
  out.eps = flat(make_field(g_, out.eps_sharp), p.lambda, p.gamma);
  return out;
}

Decomposition decompose(const RadialField& u, const RadialField& z, double eta, double t,
                        const ModulationParams& guess, const std::vector<LawAnchor>& history) {
  require(u.grid && u.grid == z.grid, "fields live on different grids");
  return Decomposer(u.grid, eta)(u.values - z.values, t, guess, history);
}

double theta_correction(const RadialGrid& g, const CVec& z, double theta_eta) {
  const int m = g.m();
  const RVec at = a_theta(g, z);
  const RVec integrand =
      ((m - (m + 1 + theta_eta) + at.array()) * z.cwiseAbs2().array() / g.r().array()).matrix();
  const RVec c = g.cumulative<double>(integrand);
  return -c(g.size() - 1);
}

double virial_functional(const RadialGrid& g, const CVec& eps, double A) {
  const VirialWeight vw = virial_weight(g, A);
  const CVec er = g.deriv(eps);
  const RVec im = (eps.conjugate().array() * er.array()).imag();
  return 0.5 * g.integrate<double>(vw.dphi.cwiseProduct(im));
}

LyapunovRecord lyapunov_diagnostics(const RadialField& w, const RadialField& eps, double b, double lambda,
                                    double eta, double theta_eta, double A, int n_a) {
  require(w.grid && w.grid == eps.grid, "fields live on different grids");
  require(lambda > 0, "lambda must be positive");
  require(A >= 1.0 && n_a >= 2, "need A >= 1 and at least two averaging points");
  const RadialGrid& g = *w.grid;
  const int m = w.index();
  LyapunovRecord rec;
  const double e_full = energy_forms(g, w.values + eps.values, m).bogomolnyi;
  const double e_w = energy_forms(g, w.values, m).bogomolnyi;
  const CVec grad = l_w_star(g, w.values, d_plus(g, w.values, w.values, m), m);
  rec.e_qd = e_full - e_w - real_inner(g, grad, eps.values);
  rec.mass = g.integrate<double>(eps.values.cwiseAbs2());
  const double h1 = h1_seminorm(g, eps.values, m);
  rec.coercivity_proxy = h1 > 0 ? rec.e_qd / (h1 * h1) : 0.0;
  const double la = std::log(A);
  double acc = 0;
  for (int k = 0; k < n_a; ++k) {
    const double ap = std::exp(0.5 * la + 0.5 * la * k / (n_a - 1));
    const double phi = virial_functional(g, eps.values, ap);
    const double ia = (rec.e_qd + b * phi + 0.5 * eta * theta_eta * rec.mass) / (lambda * lambda);
    rec.a_values.push_back(ap);
    rec.phi_a.push_back(phi);
    rec.i_a.push_back(ia);
    acc += (k == 0 || k == n_a - 1 ? 0.5 : 1.0) * ia;
  }
  // (2 / log A) int_{A^{1/2}}^{A} I_{A'} dA'/A' is the mean over log A'.
  rec.averaged_i = la > 0 ? acc / (n_a - 1) : rec.i_a.front();
  return rec;
}

RadialField z_bump(GridPtr g, double alpha) {
  const int m = g->m();
  CVec v(g->size());
  for (int i = 0; i < g->size(); ++i) {
    const double r = g->r()(i);
    v(i) = alpha * std::pow(r, m + 2) * std::exp(-r * r);
  }
  return make_field(g, v);
}

HypothesisReport hypothesis_H_check(const RadialField& z, double alpha_star) {
  require(alpha_star > 0, "alpha* must be positive");
  const RadialGrid& g = *z.grid;
  const int m = g.m(), mt = m + 2;
  const RVec& r = g.r();
  HypothesisReport rep;
  rep.alpha_star = alpha_star;
  const CVec zr = g.deriv(z.values);
  // Log-log slope near the origin.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int i = 0; i < g.size() && r(i) <= 0.1; ++i) {
    const double a = std::abs(z.values(i));
    if (!(a > 1e-300)) continue;
    const double x = std::log(r(i)), y = std::log(a);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  rep.origin_exponent =
      cnt >= 3 ? (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx) : std::numeric_limits<double>::infinity();
  for (int i = 0; i < g.size() && r(i) <= 1.0; ++i) {
    rep.c0 = std::max(rep.c0, std::abs(z.values(i)) / std::pow(r(i), mt));
    rep.c1 = std::max(rep.c1, std::abs(zr(i)) / std::pow(r(i), mt - 1));
  }
  // Even orders: ||Delta^{k/2} z||; odd orders: the H^1 seminorm of Delta^{(k-1)/2} z,
  // all with the -(m+2)-equivariant Laplacian.
  const RVec r2 = r.cwiseAbs2();
  auto lap = [&](const CVec& f) -> CVec {
    const CVec fr = g.deriv(f);
    const CVec frr = g.deriv(fr);
    return frr + fr.cwiseQuotient(r.cast<cplx>()) - (double(mt) * mt) * f.cwiseQuotient(r2.cast<cplx>());
  };
  CVec f = z.values;
  double sum = 0;
  for (int k = 0; k <= m + 4; ++k) {
    double s;
    if (k % 2 == 0) {
      if (k > 0) f = lap(f);
      s = g.norm(f);
    } else {
      s = h1_seminorm(g, f, mt);
    }
    rep.seminorms.push_back(s);
    sum += s * s;
  }
  rep.hk_norm = std::sqrt(sum);
  rep.margin = alpha_star - rep.hk_norm;
  rep.pass = rep.origin_exponent >= mt - 0.05 && rep.hk_norm < alpha_star;
  return rep;
}

namespace {

ModulationTrack run_direction(const InstabilityConfig& cfg, GridPtr g, const Decomposer& dec, const CVec& u0,
                              const RadialField& zstar, double dir) {
  const double eta = dec.eta(), theta = dec.theta_eta();
  ModulationTrack tr;
  tr.m = cfg.m;
  tr.eta = eta;
  tr.theta_eta = theta;
  EvolutionState s = make_state(make_field(g, u0), 0.0, cfg.step);
  ZState zs = make_zstate(zstar, 0.0, ZMode::tilde, cfg.step);
  std::vector<LawAnchor> history;
  ModulationParams guess{0.0, eta, 0.0};
  double prev_theta = 0, prev_t = 0, gamma_cor = 0;

  auto sample = [&](double t) {
    const Decomposition d = dec(s.u.values - zs.z.values, t, guess, history);
    TrackSample ts;
    ts.t = t;
    ts.b = d.p.b;
    ts.lambda = d.p.lambda;
    ts.gamma = d.p.gamma;
    ts.eps_l2 = g->norm(d.eps_sharp);
    ts.eps_h1 = d.p.lambda * h1_seminorm(*g, d.eps_sharp, cfg.m);
    ts.eps_dot_qb = real_inner(*g, d.eps_sharp, dec.profile_sharp(d.p));
    ts.ortho_residual = d.ortho_residual;
    const LawAnchor cur{t, d.p.b, d.p.lambda};
    ts.law_residual = history.empty() ? 0.0 : midpoint_law_residual(history.back(), cur, eta);
    ts.theta_cor = theta_correction(*g, zs.z.values, theta);
    if (!tr.samples.empty()) gamma_cor -= 0.5 * (ts.theta_cor + prev_theta) * (t - prev_t);
    ts.gamma_cor = gamma_cor;
    prev_theta = ts.theta_cor;
    prev_t = t;
    if (cfg.lyapunov) {
      const RVec q = QEtaShooter(cfg.m, eta).q_at(g->r());
      CVec qb(g->size());
      for (int i = 0; i < g->size(); ++i) qb(i) = q(i) * std::exp(-kI * (0.25 * d.p.b * g->r()(i) * g->r()(i)));
      const RadialField w = make_field(g, qb + flat(zs.z, d.p.lambda, d.p.gamma).values);
      const LyapunovRecord lr = lyapunov_diagnostics(w, d.eps, d.p.b, d.p.lambda, eta, theta, cfg.lyapunov_A);
      ts.e_qd = lr.e_qd;
      ts.phi_a = lr.phi_a.back();
      ts.lyapunov_i = lr.averaged_i;
    }
    tr.samples.push_back(ts);
    history.push_back(cur);
    if (history.size() > 2) history.erase(history.begin());
    guess = d.p;
  };

  try {
    sample(0.0);
    long k = 0;
    double t = 0;
    while (dir * t < cfg.tau * (1 - 1e-14)) {
      double dt = cfg.dt_factor * (eta * eta + t * t);
      const bool last = dir * (t + dir * dt) >= cfg.tau;
      if (last) dt = cfg.tau - dir * t;
      s = step_css(std::move(s), dir * dt);
      zs = step_zcss(std::move(zs), dir * dt, ZMode::tilde);
      t = last ? dir * cfg.tau : s.t;
      ++k;
      if (last || k % cfg.sample_every == 0) sample(t);
    }
  } catch (const NumericalError& e) {
    tr.lost = true;
    tr.message = e.what();
  }
  return tr;
}

}  // namespace

InstabilityRun instability_run(const InstabilityConfig& cfg, double eta) {
  require(eta > 0, "instability runs need eta > 0");
  require(cfg.tau > 0 && cfg.dt_factor > 0 && cfg.sample_every >= 1, "invalid instability parameters");
  GridSpec spec = cfg.grid;
  spec.m = cfg.m;
  const GridPtr g = make_grid(spec);
  const Decomposer dec(g, eta);
  InstabilityRun run;
  run.eta = eta;
  run.theta_eta = dec.theta_eta();
  run.closed_form = 2.0 * run.theta_eta * std::atan(cfg.tau / eta);
  const RadialField zstar = !cfg.zstar_file.empty() ? read_field(cfg.zstar_file, g)
                            : cfg.alpha != 0.0   ? z_bump(g, cfg.alpha)
                                                 : make_field(g, CVec::Zero(g->size()));
  run.h = hypothesis_H_check(zstar, cfg.alpha_star);
  const CVec u0 = dec.profile_sharp({0.0, eta, 0.0}) + zstar.values;
  run.forward = run_direction(cfg, g, dec, u0, zstar, 1.0);
  run.backward = run_direction(cfg, g, dec, u0, zstar, -1.0);
  for (const ModulationTrack* tr : {&run.forward, &run.backward})
    for (const TrackSample& s : tr->samples) {
      run.max_lambda_dev = std::max(run.max_lambda_dev, std::abs(s.lambda / std::hypot(s.t, eta) - 1.0));
      run.max_b_dev = std::max(run.max_b_dev, std::abs(s.b + s.t));
    }
  const bool complete = !run.forward.lost && !run.backward.lost;
  run.delta_gamma = complete ? run.forward.samples.back().gamma - run.backward.samples.back().gamma
                             : std::numeric_limits<double>::quiet_NaN();
  return run;
}

InstabilityReport instability_experiment(const InstabilityConfig& cfg) {
  require(cfg.m >= 1, "m must be >= 1");
  require(!cfg.etas.empty(), "eta list is empty");
  for (std::size_t i = 0; i < cfg.etas.size(); ++i) {
    require(cfg.etas[i] > 0, "eta list must be positive");
    if (i > 0) require(cfg.etas[i] < cfg.etas[i - 1], "eta list must be decreasing");
  }
  InstabilityReport rep;
  rep.target = (cfg.m + 1) * kPi;
  rep.tau = cfg.tau;
  std::vector<std::future<InstabilityRun>> jobs;
  for (double eta : cfg.etas) jobs.push_back(std::async(std::launch::async, instability_run, cfg, eta));
  for (auto& j : jobs) rep.runs.push_back(j.get());
  rep.monotone = true;
  for (std::size_t i = 1; i < rep.runs.size(); ++i) {
    const double prev = rep.runs[i - 1].delta_gamma, cur = rep.runs[i].delta_gamma;
    if (!(cur > prev && std::abs(cur - rep.target) < std::abs(prev - rep.target))) rep.monotone = false;
  }
  // Least-squares line in eta.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(rep.runs.size());
  for (const InstabilityRun& r : rep.runs) {
    sx += r.eta;
    sy += r.delta_gamma;
    sxx += r.eta * r.eta;
    sxy += r.eta * r.delta_gamma;
  }
  const double den = n * sxx - sx * sx;
  rep.extrapolated = n >= 2 && den != 0 ? (sy * sxx - sx * sxy) / den : sy / n;
  return rep;
}

ExactJump exact_family_jump(GridPtr g, double eta, double tau, int chain) {
  require(eta > 0 && tau > 0 && chain >= 2, "invalid exact-family jump parameters");
  const Decomposer dec(g, eta);
  ExactJump out{eta, dec.theta_eta(), 2.0 * dec.theta_eta() * std::atan(tau / eta), 0.0};
  // Geometric sample times: a tiny first step keeps the two-point start accurate, and a
  // step ratio well below 1 + sqrt(2) keeps the variable-step three-point law stable.
  const double h0 = std::min(1e-3 * eta, tau / chain);
  auto reach = [&](double q) { return h0 * (std::pow(q, chain) - 1.0) / (q - 1.0) - tau; };
  require(reach(4.0) > 0, "exact-family chain too short for a stable law discretization");
  const auto br = boost::math::tools::bisect(reach, 1.0 + 1e-9, 4.0, boost::math::tools::eps_tolerance<double>(50));
  const double q = 0.5 * (br.first + br.second);
  require(q <= 1.5, "exact-family chain too short for a stable law discretization");
  double ends[2];
  for (int side = 0; side < 2; ++side) {
    const double dir = side == 0 ? 1.0 : -1.0;
    std::vector<LawAnchor> history;
    ModulationParams guess{0.0, eta, 0.0};
    for (int k = 0; k <= chain; ++k) {
      const double t = k == chain ? dir * tau : dir * h0 * (std::pow(q, k) - 1.0) / (q - 1.0);
      const CVec u = modulated_profile(*g, g->m(), eta, dec.theta_eta(), t);
      const Decomposition d = dec(u, t, guess, history);
      history.push_back({t, d.p.b, d.p.lambda});
      if (history.size() > 2) history.erase(history.begin());
      guess = d.p;
    }
    ends[side] = guess.gamma;
  }
  out.measured = ends[0] - ends[1];
  return out;
}

}  // namespace csslab
