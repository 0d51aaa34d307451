#include <doctest.h>

#include <cmath>

#include "csslab/grid.hpp"

using namespace csslab;

namespace {

GridPtr small_grid(int m = 1, double r_max = 40.0) { return make_grid(GridSpec{m, 1024, r_max, 2.0, 8}); }

CVec sample(const RadialGrid& g, double (*f)(double)) {
  CVec v(g.size());
  for (int i = 0; i < g.size(); ++i) v(i) = f(g.r()(i));
  return v;
}

double gauss_r(double r) { return r * std::exp(-r * r); }

}  // namespace

TEST_SUITE("grid") {
  TEST_CASE("reference element integrates polynomials of degree 2p-1 exactly") {
    const ReferenceElement e(8);
    CHECK(e.weights.sum() == doctest::Approx(2.0).epsilon(1e-14));
    for (int k = 0; k <= 15; ++k) {
      const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
      double q = 0;
      for (int i = 0; i <= 8; ++i) q += e.weights(i) * std::pow(e.nodes(i), k);
      CHECK(q == doctest::Approx(exact).epsilon(1e-13));
    }
  }

  TEST_CASE("cardinal polynomials form a partition of unity") {
    const ReferenceElement e(6);
    for (double x : {-0.9, -0.3, 0.17, 0.8}) CHECK(e.cardinal(x).sum() == doctest::Approx(1.0).epsilon(1e-13));
  }

  TEST_CASE("graded breaks are increasing and hit both ends") {
    const auto b = graded_breaks(64, 2.0, 1e3);
    REQUIRE(b.size() == 65);
    CHECK(b.front() == 0.0);
    CHECK(b.back() == doctest::Approx(1e3));
    for (std::size_t i = 1; i < b.size(); ++i) CHECK(b[i] > b[i - 1]);
  }

  TEST_CASE("planar integral of a Gaussian") {
    const GridPtr g = small_grid();
    // int e^{-r^2} 2 pi r dr = pi
    CVec f(g->size());
    for (int i = 0; i < g->size(); ++i) f(i) = std::exp(-g->r()(i) * g->r()(i));
    CHECK(g->integrate<cplx>(f).real() == doctest::Approx(kPi).epsilon(1e-12));
  }

  TEST_CASE("derivative is spectrally accurate") {
    const GridPtr g = small_grid();
    const CVec f = sample(*g, gauss_r);
    const CVec d = g->deriv<cplx>(f);
    double err = 0;
    for (int i = 0; i < g->size(); ++i) {
      const double r = g->r()(i);
      err = std::max(err, std::abs(d(i) - (1.0 - 2.0 * r * r) * std::exp(-r * r)));
    }
    CHECK(err < 1e-8);
  }

  TEST_CASE("cumulative and tail integrals telescope") {
    const GridPtr g = small_grid();
    const RVec f = sample(*g, gauss_r).real();
    const RVec c = g->cumulative<double>(f), t = g->tail<double>(f);
    const double total = c(g->size() - 1);
    CHECK(total == doctest::Approx(0.5).epsilon(1e-12));
    CHECK((c + t - RVec::Constant(g->size(), total)).cwiseAbs().maxCoeff() < 1e-13);
  }

  TEST_CASE("stiffness is symmetric and matches the Dirichlet form") {
    const GridPtr g = small_grid();
    const Eigen::SparseMatrix<double> s = g->stiffness();
    const Eigen::SparseMatrix<double> st = s.transpose();
    CHECK((s - st).norm() < 1e-12 * s.norm());
    const RVec f = sample(*g, gauss_r).real();
    const RVec fr = g->deriv<double>(f);
    const double form = f.dot(s * f);
    CHECK(form == doctest::Approx(g->integrate<double>(fr.cwiseAbs2())).epsilon(1e-10));
  }

  TEST_CASE("interpolation reproduces nodal values and vanishes outside") {
    const GridPtr g = small_grid();
    const CVec f = sample(*g, gauss_r);
    RVec at(3);
    at << g->r()(17), 0.3141, 2.0 * g->r_max();
    const CVec v = g->interpolate<cplx>(f, at);
    CHECK(std::abs(v(0) - f(17)) < 1e-14);
    CHECK(std::abs(v(1) - gauss_r(0.3141)) < 1e-9);
    CHECK(std::abs(v(2)) == 0.0);
  }

  TEST_CASE("Lambda is anti-symmetric in the real inner product") {
    const GridPtr g = small_grid();
    CVec f(g->size()), h(g->size());
    for (int i = 0; i < g->size(); ++i) {
      const double r = g->r()(i);
      f(i) = cplx(r, 0.5 * r * r) * std::exp(-r * r);
      h(i) = cplx(0.3, -1.0) * r * std::exp(-0.5 * (r - 1) * (r - 1));
    }
    CHECK(g->inner(lambda_op(*g, f), h) == doctest::Approx(-g->inner(f, lambda_op(*g, h))).epsilon(1e-9));
  }

  TEST_CASE("Hardy bound |f/r| <= |f|_{H^1_m} / m for equivariant fields") {
    for (int m : {1, 2, 3}) {
      const GridPtr g = small_grid(m);
      CVec f(g->size());
      for (int i = 0; i < g->size(); ++i) f(i) = std::pow(g->r()(i), m) * std::exp(-g->r()(i));
      const CVec over_r = f.cwiseQuotient(g->r().cast<cplx>());
      CHECK(m * g->norm(over_r) <= norm_h1m(*g, f, m));
    }
  }

  TEST_CASE("rejects malformed specs") {
    CHECK_THROWS_AS(make_grid(GridSpec{1, 1001, 10.0, 1.0, 8}), ValidationError);
    CHECK_THROWS_AS(make_grid(GridSpec{1, 1024, -1.0, 1.0, 8}), ValidationError);
  }
}
