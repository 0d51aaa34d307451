#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "csslab/gauge.hpp"
#include "csslab/linops.hpp"
#include "csslab/profiles.hpp"

using namespace csslab;

namespace {

double quad(const std::function<double(double)>& f) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 61>::integrate(f, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-13);
}

}  // namespace

TEST_SUITE("profiles") {
  TEST_CASE("closed-form norms agree with adaptive quadrature") {
    for (int m : {1, 2, 3}) {
      const double mass = 2 * kPi * quad([m](double r) { return q_value(m, r) * q_value(m, r) * r; });
      CHECK(mass == doctest::Approx(8 * kPi * (m + 1)).epsilon(1e-10));
      const double rq = 2 * kPi * quad([m](double r) { return std::pow(r * q_value(m, r), 2) * r; });
      CHECK(rq == doctest::Approx(rq_norm_sq(m)).epsilon(1e-9));
    }
  }

  TEST_CASE("closed-form derivative matches a central difference") {
    for (double r : {0.1, 0.9, 3.0}) {
      const double h = 1e-6;
      CHECK(q_deriv(2, r) == doctest::Approx((q_value(2, r + h) - q_value(2, r - h)) / (2 * h)).epsilon(1e-7));
    }
  }

  TEST_CASE("Lambda Q closed form matches the grid generator") {
    const GridPtr g = make_grid(GridSpec{1, 2048, 100.0, 2.0, 8});
    const RadialField lq = lambda_q_profile(g);
    const CVec num = lambda_op(*g, q_profile(g).values);
    CHECK(g->norm(lq.values - num) < 1e-9 * g->norm(lq.values));
  }

  TEST_CASE("explicit blow-up solution keeps the soliton mass") {
    const GridPtr g = make_grid(GridSpec{1, 4096, 100.0, 20.0, 8});
    for (double t : {-1.0, -0.5}) {
      const RadialField s = s_explicit(t, g);
      CHECK(g->integrate<double>(s.values.cwiseAbs2()) == doctest::Approx(16 * kPi).epsilon(1e-6));
    }
  }

  TEST_CASE("rho solves L_Q rho = psi and pairs with Q") {
    const GridPtr g = make_grid(GridSpec{1, 4096, 1e3, 2.0, 8});
    const RhoSolution rs = rho_solve(g);
    const CVec lr = l_w(*g, q_profile(g).values, rs.rho.values, 1);
    const RadialField psi = psi_profile(g);
    CHECK(g->norm(lr - psi.values) < 1e-8 * g->norm(rs.rho.values));
    CHECK(inner_r(rs.rho, q_profile(g)) == doctest::Approx(psi_norm_sq(1)).epsilon(1e-5));
  }

  TEST_CASE("rho is bounded by r^2 Q") {
    const GridPtr g = make_grid(GridSpec{2, 2048, 100.0, 2.0, 8});
    const RhoSolution rs = rho_solve(g);
    double c = 0;
    for (int i = 0; i < g->size(); ++i) {
      const double r = g->r()(i);
      c = std::max(c, std::abs(rs.rho.values(i)) / (std::max(r * r, 1.0) * q_value(2, r)));
    }
    CHECK(c < 10.0);
  }

  TEST_CASE("modified profile tends to the static one as eta vanishes") {
    const QEtaShooter a(1, 0.0);
    RVec r(3);
    r << 0.5, 1.0, 3.0;
    const RVec q = a.q_at(r);
    for (int i = 0; i < 3; ++i) CHECK(q(i) == doctest::Approx(q_value(1, r(i))).epsilon(1e-9));
    const double th = QEtaShooter(1, 1e-3).theta_from_connection();
    CHECK(std::abs(th - 2.0) < 2e-3);
    CHECK(th < 2.0);
  }

  TEST_CASE("modified profile solves its second-order equation") {
    const GridPtr g = make_grid(GridSpec{1, 4096, 1e3, 2.0, 8});
    const QEtaSolution s = q_eta_solve(g, 0.02);
    CHECK(s.residual_rel < 1e-6);
    CHECK(s.theta_eta == doctest::Approx(s.theta_ode).epsilon(1e-8));
    CHECK(s.r_eta == doctest::Approx(1.0 / std::sqrt(0.2)));
  }

  TEST_CASE("profile bundle rejects invalid parameters") {
    const GridPtr g = make_grid(GridSpec{1, 512, 50.0, 2.0, 8});
    CHECK_THROWS_AS(build_profiles(g, -0.1), ValidationError);
    CHECK_THROWS_AS(build_profiles(g, 0.1, 0.5), ValidationError);
  }
}
