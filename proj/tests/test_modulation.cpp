#include <doctest.h>

#include <cmath>

#include "csslab/modulation.hpp"
#include "csslab/profiles.hpp"

using namespace csslab;

namespace {

GridPtr grid() { return make_grid(GridSpec{1, 2048, 50.0, 0.5, 8}); }

}  // namespace

TEST_SUITE("modulation") {
  TEST_CASE("sharp and flat are inverse rescalings") {
    const GridPtr g = grid();
    const RadialField q = q_profile(g);
    const RadialField back = flat(sharp(q, 0.7, 0.3), 0.7, 0.3);
    double err = 0;
    for (int i = 0; i < g->size() && g->r()(i) < 20.0; ++i) err = std::max(err, std::abs(back.values(i) - q.values(i)));
    CHECK(err < 1e-8);
    // The rescaling preserves mass.
    const RadialField s = sharp(q, 0.5, 1.0);
    CHECK(g->integrate<double>(s.values.cwiseAbs2()) == doctest::Approx(16 * kPi).epsilon(1e-6));
  }

  TEST_CASE("decomposition recovers the parameters of a modulated soliton") {
    const GridPtr g = grid();
    const Decomposer dec(g, 0.0);
    const ModulationParams truth{0.4, 0.4, 0.7};
    const CVec u = dec.profile_sharp(truth);
    const Decomposition d = dec(u, -0.4, ModulationParams{0.38, 0.42, 0.65});
    CHECK(d.p.b == doctest::Approx(truth.b).epsilon(1e-8));
    CHECK(d.p.lambda == doctest::Approx(truth.lambda).epsilon(1e-8));
    CHECK(d.p.gamma == doctest::Approx(truth.gamma).epsilon(1e-8));
    CHECK(d.ortho_residual < 1e-10);
    CHECK(g->norm(d.eps_sharp) < 1e-8 * g->norm(u));
  }

  TEST_CASE("decomposition keeps gamma on the branch of the guess") {
    const GridPtr g = grid();
    const Decomposer dec(g, 0.0);
    const ModulationParams truth{0.5, 0.5, 0.2 + 4 * kPi};
    const Decomposition d = dec(dec.profile_sharp(truth), -0.5, ModulationParams{0.5, 0.5, 4 * kPi});
    CHECK(d.p.gamma == doctest::Approx(truth.gamma).epsilon(1e-8));
  }

  TEST_CASE("midpoint law residual is second order on the exact family") {
    const double eta = 0.1;
    auto anchor = [&](double t) { return LawAnchor{t, -t, std::sqrt(t * t + eta * eta)}; };
    const double r1 = std::abs(midpoint_law_residual(anchor(0.1), anchor(0.1 + 1e-2), eta));
    const double r2 = std::abs(midpoint_law_residual(anchor(0.1), anchor(0.1 + 5e-3), eta));
    CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.05));
  }

  TEST_CASE("theta correction vanishes with z") {
    const GridPtr g = grid();
    CHECK(theta_correction(*g, CVec::Zero(g->size()), 1.9) == 0.0);
    const RadialField z = z_bump(g, 1e-2);
    CHECK(theta_correction(*g, z.values, 1.9) != 0.0);
  }

  TEST_CASE("virial functional at A = inf is Phi") {
    const GridPtr g = grid();
    const CVec u = pseudoconformal_phase(*g, q_profile(g).values, 0.3);
    // Phi[Q_b] = -b/4 |rQ|^2 for the phase e^{-i b r^2/4}.
    const double phi = virial_functional(*g, u, std::numeric_limits<double>::infinity());
    const RVec r2q2 = g->r().cwiseAbs2().cwiseProduct(q_profile(g).values.cwiseAbs2());
    CHECK(phi == doctest::Approx(-0.3 / 4 * g->integrate<double>(r2q2)).epsilon(1e-8));
  }

  TEST_CASE("Lyapunov diagnostics vanish at eps = 0") {
    const GridPtr g = grid();
    const RadialField q = q_profile(g);
    const LyapunovRecord l = lyapunov_diagnostics(q, q.like(CVec::Zero(g->size())), 0.0, 1.0, 0.0, 2.0);
    CHECK(l.e_qd == doctest::Approx(0.0));
    CHECK(l.mass == 0.0);
    CHECK(l.averaged_i == doctest::Approx(0.0));
  }

  TEST_CASE("quadratic energy part is positive near Q") {
    const GridPtr g = grid();
    const RadialField q = q_profile(g);
    CVec e(g->size());
    for (int i = 0; i < g->size(); ++i) {
      const double r = g->r()(i);
      e(i) = cplx(1e-4, 2e-4) * r * std::exp(-(r - 3) * (r - 3));
    }
    const LyapunovRecord l = lyapunov_diagnostics(q, q.like(e), 0.0, 1.0, 0.0, 2.0);
    CHECK(l.e_qd > 0.0);
    CHECK(l.coercivity_proxy > 0.0);
  }

  TEST_CASE("hypothesis check on the default bump") {
    const GridPtr g = make_grid(GridSpec{1, 4096, 50.0, 0.2, 8});
    const HypothesisReport h1 = hypothesis_H_check(z_bump(g, 1e-2), 1.0);
    const HypothesisReport h2 = hypothesis_H_check(z_bump(g, 2e-2), 1.0);
    CHECK(h1.origin_exponent == doctest::Approx(3.0).epsilon(0.02));
    CHECK(h1.c0 == doctest::Approx(1e-2).epsilon(1e-3));
    REQUIRE(h1.seminorms.size() == 6);
    // Every seminorm is linear in the amplitude.
    for (std::size_t k = 0; k < h1.seminorms.size(); ++k)
      CHECK(h2.seminorms[k] == doctest::Approx(2 * h1.seminorms[k]).epsilon(1e-10));
    CHECK(hypothesis_H_check(z_bump(g, 1e-6), 1.0).pass);
  }

  TEST_CASE("exact family phase jump matches the closed form") {
    const GridPtr g = make_grid(GridSpec{1, 4096, 50.0, 0.2, 8});
    const ExactJump j = exact_family_jump(g, 0.1, 0.2);
    CHECK(j.measured == doctest::Approx(j.closed_form).epsilon(1e-6));
    CHECK(j.closed_form == doctest::Approx(2 * j.theta_eta * std::atan(2.0)));
    CHECK_THROWS_AS(exact_family_jump(g, 0.1, 0.2, 8), ValidationError);
  }

  TEST_CASE("instability config validation") {
    InstabilityConfig c;
    c.etas = {0.01, 0.02};
    CHECK_THROWS_AS(instability_experiment(c), ValidationError);
    c.etas = {};
    CHECK_THROWS_AS(instability_experiment(c), ValidationError);
  }
}
