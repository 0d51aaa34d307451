#include <doctest.h>

#include <cmath>

#include "csslab/evolve.hpp"
#include "csslab/profiles.hpp"

using namespace csslab;

namespace {

GridPtr grid(int m = 1, double r_max = 50.0) { return make_grid(GridSpec{m, 1024, r_max, 2.0, 8}); }

CVec gaussian(const RadialGrid& g, cplx c, double s) {
  CVec f(g.size());
  for (int i = 0; i < g.size(); ++i) {
    const double r = g.r()(i);
    f(i) = c * std::pow(r, g.m()) * std::exp(-r * r / s);
  }
  return f;
}

}  // namespace

TEST_SUITE("evolve") {
  TEST_CASE("Galerkin Laplacian matches the equivariant Laplacian") {
    for (int m : {1, 2}) {
      const GridPtr g = grid(m);
      const auto p = css_propagator(g, m);
      const CVec f = gaussian(*g, 1.0, 1.0);
      CVec exact(g->size());
      for (int i = 0; i < g->size(); ++i) {
        const double r = g->r()(i);
        exact(i) = ((4.0 * m + 4.0) * std::pow(r, m) - 4.0 * std::pow(r, m + 2)) * std::exp(-r * r);
      }
      CHECK(g->norm(p->apply_laplacian(f) - exact) < 1e-8 * g->norm(exact));
    }
  }

  TEST_CASE("implicit midpoint conserves mass and is time reversible") {
    const GridPtr g = grid();
    const CVec u0 = gaussian(*g, cplx(1.0, 0.5), 2.0);
    EvolutionState s = make_state(make_field(g, u0), 0.0);
    const double m0 = g->integrate<double>(u0.cwiseAbs2());
    for (int k = 0; k < 20; ++k) s = step_css(std::move(s), 1e-3);
    CHECK(g->integrate<double>(s.u.values.cwiseAbs2()) == doctest::Approx(m0).epsilon(1e-12));
    for (int k = 0; k < 20; ++k) s = step_css(std::move(s), -1e-3);
    CHECK(g->norm(s.u.values - u0) < 1e-9 * g->norm(u0));
    CHECK(s.t == doctest::Approx(0.0).epsilon(1e-15));
  }

  TEST_CASE("static solution stays put") {
    const GridPtr g = make_grid(GridSpec{1, 4096, 1e3, 2.0, 8});
    const CVec q = q_profile(g).values;
    EvolutionState s = make_state(make_field(g, q), 0.0);
    for (int k = 0; k < 20; ++k) s = step_css(std::move(s), 1e-2);
    CHECK(g->norm(s.u.values - q) < 1e-7 * g->norm(q));
  }

  TEST_CASE("monitors of the static solution") {
    const GridPtr g = make_grid(GridSpec{1, 2048, 1e3, 2.0, 8});
    const MonitorRecord mr = monitors(*g, q_profile(g).values, 1);
    CHECK(mr.mass == doctest::Approx(16 * kPi).epsilon(1e-9));
    CHECK(std::abs(mr.energy) < 1e-10);
    CHECK(std::abs(mr.phi) < 1e-12);
    CHECK(std::abs(mr.flux) < 1e-12);
  }

  TEST_CASE("zCSS tilde and potential modes agree on small data") {
    const GridPtr g = grid(1, 30.0);
    const RadialField z0 = make_field(g, gaussian(*g, 1e-2, 1.0));
    ZState a = make_zstate(z0, 0.0, ZMode::tilde), b = make_zstate(z0, 0.0, ZMode::potential);
    for (int k = 0; k < 50; ++k) {
      a = step_zcss(std::move(a), 2e-3, ZMode::tilde);
      b = step_zcss(std::move(b), 2e-3, ZMode::potential);
    }
    CHECK(g->norm(a.z.values - b.z.values) < 1e-6 * g->norm(a.z.values));
  }

  TEST_CASE("exact modulation laws") {
    const ExactModulation e = exact_modulation(0.3, 0.4, 1.9);
    CHECK(e.lambda == doctest::Approx(0.5));
    CHECK(e.b == doctest::Approx(-0.3));
    CHECK(e.gamma == doctest::Approx(1.9 * std::atan(0.75)));
    const ExactModulation z = exact_modulation(-0.5, 0.0, 2.0);
    CHECK(z.lambda == doctest::Approx(0.5));
    CHECK(z.b == doctest::Approx(0.5));
  }

  TEST_CASE("rejects a zero time step") {
    const GridPtr g = grid();
    const auto p = css_propagator(g, 1);
    CVec u = gaussian(*g, 1.0, 1.0);
    CHECK_THROWS_AS(p->step(u, 0.0), ValidationError);
  }
}
