#include "csslab/linops.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "csslab/gauge.hpp"
#include "csslab/profiles.hpp"

namespace csslab {

namespace {

CVec scale(const RVec& s, const CVec& v) { return s.cast<cplx>().cwiseProduct(v); }

void same_grid(const RadialField& a, const RadialField& b) {
  require(a.grid && a.grid == b.grid, "fields live on different grids");
}

}  // namespace

CVec d_plus(const RadialGrid& g, const CVec& w, const CVec& f, int index) {
  const RVec at = a_theta(g, w);
  return g.deriv(f) - scale((at.array() + index).matrix().cwiseQuotient(g.r()), f);
}

CVec d_plus_star(const RadialGrid& g, const CVec& w, const CVec& f, int index) {
  const RVec at = a_theta(g, w);
  return -g.deriv(f) - scale((at.array() + index + 1).matrix().cwiseQuotient(g.r()), f);
}

RadialField d_plus(const RadialField& u, const RadialField& f) {
  same_grid(u, f);
  return f.like(d_plus(*f.grid, u.values, f.values, f.index()));
}

RVec b_op(const RadialGrid& g, const CVec& w, const CVec& f) {
  const RVec re = (w.conjugate().array() * f.array()).real();
  return g.cumulative<double>(re.cwiseProduct(g.r())).cwiseQuotient(g.r());
}

CVec b_star(const RadialGrid& g, const CVec& w, const CVec& f) {
  return scale(g.tail<double>(f.real()), w);
}

CVec l_w(const RadialGrid& g, const CVec& w, const CVec& f, int index) {
  return d_plus(g, w, f, index) + scale(b_op(g, w, f), w);
}

CVec l_w_star(const RadialGrid& g, const CVec& w, const CVec& f, int index) {
  const CVec wf = (w.conjugate().array() * f.array()).matrix();
  return d_plus_star(g, w, f, index) + b_star(g, w, wf);
}

RadialField l_w(const RadialField& w, const RadialField& f) {
  same_grid(w, f);
  return f.like(l_w(*f.grid, w.values, f.values, f.index()));
}

RadialField l_w_star(const RadialField& w, const RadialField& f) {
  same_grid(w, f);
  return f.like(l_w_star(*f.grid, w.values, f.values, f.index()));
}

LinearizedContext make_context(const RadialField& w, double self_dual_tol) {
  LinearizedContext c;
  c.grid = w.grid;
  c.w = w.values;
  c.index = w.index();
  c.a_theta = a_theta(*w.grid, w.values);
  c.dplus_w = d_plus(*w.grid, w.values, w.values, c.index);
  const double nw = w.grid->norm(w.values);
  c.self_dual = nw > 0 && w.grid->norm(c.dplus_w) <= self_dual_tol * nw && w.values.imag().norm() == 0.0;
  c.checksum = checksum(w.values);
  return c;
}

CVec lcal_apply(const LinearizedContext& c, const CVec& eps) {
  const RadialGrid& g = *c.grid;
  const CVec le = l_w(g, c.w, eps, c.index);
  CVec out = l_w_star(g, c.w, le, c.index);
  if (c.self_dual) return out;
  const CVec& d = c.dplus_w;
  const CVec ed = (eps.conjugate().array() * d.array()).matrix();
  const CVec wd = (c.w.conjugate().array() * d.array()).matrix();
  out += scale(b_op(g, c.w, eps), d) + b_star(g, c.w, ed) + b_star(g, eps, wd);
  return out;
}

RadialField lcal_apply(const LinearizedContext& c, const RadialField& eps) {
  require(eps.grid == c.grid, "field and context live on different grids");
  return eps.like(lcal_apply(c, eps.values));
}

ConjugationResiduals conjugation_check(double b, const RadialField& f, const RadialField& w,
                                       const RadialField& eps) {
  same_grid(f, w);
  same_grid(f, eps);
  const RadialGrid& g = *f.grid;
  const int m = f.index();
  const RVec r2 = g.r().cwiseAbs2();
  auto phase = [&](const CVec& v) { return pseudoconformal_phase(g, v, b); };
  // d_b(v_b) = -i r^2/4 v_b, analytically.
  auto d_b = [&](const CVec& vb) -> CVec { return -kI * scale(0.25 * r2, vb); };
  auto rel = [&](const CVec& res, const CVec& ref) {
    const double n = g.norm(ref);
    return n > 0 ? g.norm(res) / n : g.norm(res);
  };
  auto ld = [&](const CVec& v) { return l_w_star(g, v, d_plus(g, v, v, m), m); };
  ConjugationResiduals out;

  const CVec fb = phase(f.values);
  const CVec lhs1 = ld(fb);
  const CVec rhs1 = phase(ld(f.values)) + (kI * b) * lambda_op(g, fb) - (kI * b * b) * d_b(fb);
  out.phase_bogomolnyi = rel(lhs1 - rhs1, lhs1);

  const CVec wb = phase(w.values), eb = phase(eps.values);
  const LinearizedContext cw = make_context(w), cwb = make_context(w.like(wb));
  const CVec lhs2 = lcal_apply(cwb, eb);
  const CVec rhs2 = phase(lcal_apply(cw, eps.values)) + (kI * b) * lambda_op(g, eb) - (kI * b * b) * d_b(eb);
  out.phase_linearized = rel(lhs2 - rhs2, lhs2);

  // The algebraic identity and the ladder are statements about Q_b.
  const CVec qb = phase(q_profile(f.grid).values);
  const CVec lam_qb = lambda_op(g, qb);
  const CVec res3 = -ld(qb) + (kI * b) * lam_qb - scale(0.25 * b * b * r2, qb);
  out.algebraic = rel(res3, lam_qb);

  const CVec res4 = lcal_apply(make_context(f.like(qb)), CVec(kI * qb)) + b * lam_qb - (b * b) * d_b(qb);
  out.ladder = rel(res4, lam_qb);
  return out;
}

double bump(double r) {
  if (r <= 0.5 || r >= 2.0) return 0.0;
  return std::exp(-1.0 / ((r - 0.5) * (2.0 - r)));
}

ZPair default_z_pair(GridPtr g) {
  using boost::math::quadrature::gauss_kronrod;
  const int m = g->m();
  auto lq = [m](double r) {
    const double p = std::pow(r, 2 * m + 2);
    return q_value(m, r) * (1.0 + m - 2.0 * (m + 1) * p / (1.0 + p));
  };
  const double pair_re =
      2.0 * kPi * gauss_kronrod<double, 61>::integrate([&](double r) { return bump(r) * lq(r) * r; }, 0.5, 2.0, 15, 1e-14);
  const double pair_im = 2.0 * kPi * gauss_kronrod<double, 61>::integrate(
                                         [&](double r) { return bump(r) * q_value(m, r) * r; }, 0.5, 2.0, 15, 1e-14);
  require(std::abs(pair_re) > 1e-12 && std::abs(pair_im) > 1e-12, "default Z pair is degenerate");
  ZPair z;
  z.re_scale = 1.0 / pair_re;
  z.im_scale = 1.0 / pair_im;
  CVec re(g->size()), im(g->size());
  for (int i = 0; i < g->size(); ++i) {
    const double bv = bump(g->r()(i));
    re(i) = bv * z.re_scale;
    im(i) = bv * z.im_scale;
  }
  z.z_re = make_field(g, re);
  z.z_im = make_field(g, im);
  return z;
}

namespace {

// Orthonormal basis (columns) of {x : c^T x = 0}.
Eigen::MatrixXd complement_basis(const RVec& c) {
  const int n = static_cast<int>(c.size());
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(c);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return q.rightCols(n - 1);
}

std::vector<double> gen_eigs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(a, b, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("generalized eigensolve failed");
  const RVec v = es.eigenvalues();
  return {v.data(), v.data() + v.size()};
}

}  // namespace

CoercivityReport coercivity_estimate(const RadialField& z_re, const RadialField& z_im, int n_modes,
                                     double kernel_tol) {
  same_grid(z_re, z_im);
  const GridPtr gp = z_re.grid;
  const RadialGrid& g = *gp;
  const int n = g.size(), m = g.m();
  require(n <= 4000, "coercivity eigenproblem is dense; use a reduced grid");
  const RVec& r = g.r();
  const RadialField q = q_profile(gp);
  const RVec qv = q.values.real();
  const RVec at = a_theta(g, q.values);

  const Eigen::MatrixXd d = g.deriv_matrix();
  const Eigen::MatrixXd cm = g.cumulative_matrix();
  Eigen::MatrixXd lim = d;
  lim.diagonal() -= ((at.array() + m) / r.array()).matrix();
  // Real part: D_+ a + Q (1/r) int_0^r Q a s ds.
  Eigen::MatrixXd lre = lim;
  lre.noalias() += (qv.array() / r.array()).matrix().asDiagonal() * cm * (qv.array() * r.array()).matrix().asDiagonal();

  const RVec& w = g.w();
  const Eigen::MatrixXd are = lre.transpose() * w.asDiagonal() * lre;
  const Eigen::MatrixXd aim = lim.transpose() * w.asDiagonal() * lim;
  Eigen::MatrixXd gram = d.transpose() * w.asDiagonal() * d;
  gram.diagonal() += (double(m) * m * w.array() / r.array().square()).matrix();

  CoercivityReport rep;
  const RadialField lq = lambda_q_profile(gp);
  const double a11 = inner_r(z_re, lq), a22 = inner_r(z_im, q);
  rep.nondegeneracy = a11 * a22;  // off-diagonal pairings vanish: (Z_re, iQ)_r = (i Z_im, Lambda Q)_r = 0
  if (std::abs(rep.nondegeneracy) < 1e-12) throw ValidationError("singular nondegeneracy matrix for the Z pair");

  std::vector<double> all = gen_eigs(are, gram);
  const std::vector<double> ei = gen_eigs(aim, gram);
  all.insert(all.end(), ei.begin(), ei.end());
  std::sort(all.begin(), all.end());
  rep.upper = all.back();
  for (double v : all)
    if (v < kernel_tol) ++rep.near_kernel;
  rep.lowest.assign(all.begin(), all.begin() + std::min<int>(n_modes, static_cast<int>(all.size())));

  const RVec cre = w.cwiseProduct(z_re.values.real());
  const RVec cim = w.cwiseProduct(z_im.values.real());
  const Eigen::MatrixXd pre = complement_basis(cre), pim = complement_basis(cim);
  const std::vector<double> cr = gen_eigs(pre.transpose() * are * pre, pre.transpose() * gram * pre);
  const std::vector<double> ci = gen_eigs(pim.transpose() * aim * pim, pim.transpose() * gram * pim);
  rep.c_est = std::min(cr.front(), ci.front());
  return rep;
}

}  // namespace csslab
