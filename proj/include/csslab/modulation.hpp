#pragma once

#include <string>
#include <vector>

#include "csslab/evolve.hpp"
#include "csslab/grid.hpp"
#include "csslab/linops.hpp"
#include "csslab/profiles.hpp"

namespace csslab {

// f# (r) = f(r / lambda) e^{i gamma} / lambda and g_flat(y) = lambda g(lambda y) e^{-i gamma},
// by interpolation on the field's own grid.
RadialField sharp(const RadialField& f, double lambda, double gamma);
RadialField flat(const RadialField& g, double lambda, double gamma);
// Nodes inside r <= scale; a warning is logged by sharp/flat when this is below 4.
int nodes_within(const RadialGrid& g, double scale);

struct ModulationParams {
  double b = 0, lambda = 1, gamma = 0;
};

// Earlier samples used to discretize the dynamical law when eta > 0.
struct LawAnchor {
  double t, b, lambda;
};

struct Decomposition {
  ModulationParams p;
  CVec eps_sharp;  // u - z - (Q_b^eta)#, in the original frame
  RadialField eps;  // rescaled back to the profile frame
  double ortho_residual = 0, law_residual = 0;
  int iterations = 0;
};

/// Newton solve for (b, lambda, gamma): two orthogonality conditions against the
/// modulated Z pair plus the law b = lambda^2/|t| (eta = 0) or a discretization of
/// mu_t b + b^2 - mu b_t - eta^2 = 0 (mu = lambda^2) for eta > 0. With two earlier
/// samples the derivatives come from the three-point interpolant at t; with one,
/// the law is imposed at the midpoint. Without history and eta > 0, b is pinned
/// to the guess.
class Decomposer {
 public:
  Decomposer(GridPtr g, double eta, double tol = 1e-12);

  Decomposition operator()(const CVec& u_minus_z, double t, const ModulationParams& guess,
                           const std::vector<LawAnchor>& history = {}) const;
  // (Q_b^eta)# on the grid, evaluated from the profile ODE (no interpolation).
  CVec profile_sharp(const ModulationParams& p) const;
  double law_residual(double t, const ModulationParams& p, const std::vector<LawAnchor>& history,
                      const ModulationParams& guess) const;

  double eta() const { return eta_; }
  double theta_eta() const { return theta_; }
  const ZPair& z_pair() const { return z_; }
  const GridPtr& grid() const { return g_; }

 private:
  GridPtr g_;
  double eta_, theta_, tol_;
  QEtaShooter shooter_;
  ZPair z_;
  mutable double cached_lambda_ = -1;
  mutable RVec cached_q_;
  const RVec& q_scaled(double lambda) const;
  void ortho(const CVec& d, const ModulationParams& p, double out[2]) const;
};

Decomposition decompose(const RadialField& u, const RadialField& z, double eta, double t,
                        const ModulationParams& guess, const std::vector<LawAnchor>& history = {});
// Midpoint form of the law between two samples; O(dt^2) on exact solutions.
double midpoint_law_residual(const LawAnchor& prev, const LawAnchor& cur, double eta);

// theta_{z -> Q_b^eta#} = -int (m - (m + 1 + theta_eta) + A_theta[z]) |z|^2 dr / r.
double theta_correction(const RadialGrid& g, const CVec& z, double theta_eta);

struct LyapunovRecord {
  double e_qd = 0, mass = 0, coercivity_proxy = 0, averaged_i = 0;
  std::vector<double> a_values, phi_a, i_a;
};
// Fields in the profile frame: w = Q_b^eta + z_flat, eps from the decomposition.
LyapunovRecord lyapunov_diagnostics(const RadialField& w, const RadialField& eps, double b, double lambda,
                                    double eta, double theta_eta, double A = 100.0, int n_a = 16);
// Phi_A[eps] = 1/2 int phi_A' Im(conj(eps) eps_r); A = inf gives r^2/2.
double virial_functional(const RadialGrid& g, const CVec& eps, double A);

struct HypothesisReport {
  bool pass = false;
  double origin_exponent = 0;     // log-log slope of |z| near the origin
  double c0 = 0, c1 = 0;          // sup_{r<=1} |z|/r^{m+2} and |z_r|/r^{m+1}
  std::vector<double> seminorms;  // homogeneous H^k_{-(m+2)} seminorms, k = 0..m+4
  double hk_norm = 0;             // inhomogeneous norm at the top order
  double alpha_star = 0, margin = 0;
};
HypothesisReport hypothesis_H_check(const RadialField& z, double alpha_star);

// alpha r^{m+2} e^{-r^2}.
RadialField z_bump(GridPtr g, double alpha);

struct TrackSample {
  double t = 0, b = 0, lambda = 0, gamma = 0;
  double eps_l2 = 0, eps_h1 = 0, eps_dot_qb = 0;
  double e_qd = 0, phi_a = 0, lyapunov_i = 0;
  double ortho_residual = 0, law_residual = 0;
  double theta_cor = 0, gamma_cor = 0;
};

struct ModulationTrack {
  int m = 1;
  double eta = 0, theta_eta = 0;
  std::string z_provenance = "bump on [1/2, 2], (Z_re, Lambda Q)_r = (Z_im, Q)_r = 1";
  std::vector<TrackSample> samples;
  bool lost = false;
  std::string message;
};

struct InstabilityConfig {
  int m = 1;
  std::vector<double> etas{0.04, 0.02, 0.01};
  double alpha = 1e-2;  // z* amplitude; 0 disables z*
  std::string zstar_file;  // tabulated z* (columns r, re, im); overrides alpha
  double alpha_star = 1.0;
  double tau = 0.2;
  GridSpec grid{1, 4096, 50.0, 0.2, 8};
  double dt_factor = 0.006;  // dt = c (eta^2 + t^2)
  int sample_every = 10;
  double lyapunov_A = 100.0;
  bool lyapunov = false;
  StepOptions step{16, 1e-12, 1e-6, true};
};

struct InstabilityRun {
  double eta = 0, theta_eta = 0;
  double delta_gamma = 0, closed_form = 0;
  double max_lambda_dev = 0, max_b_dev = 0;  // |lambda/<t> - 1| and |b + t|
  ModulationTrack forward, backward;
  HypothesisReport h;
};

struct InstabilityReport {
  double target = 0;  // (m+1) pi
  double tau = 0;
  std::vector<InstabilityRun> runs;
  bool monotone = false;
  double extrapolated = 0;  // linear-in-eta extrapolation of Delta gamma to eta = 0
};

InstabilityRun instability_run(const InstabilityConfig& cfg, double eta);
InstabilityReport instability_experiment(const InstabilityConfig& cfg);

// Closed-form phase jump 2 theta_eta atan(tau/eta) and its measurement by decomposing
// the exact family at +-tau along a chain of anchored samples.
struct ExactJump {
  double eta, theta_eta, closed_form, measured;
};
ExactJump exact_family_jump(GridPtr g, double eta, double tau, int chain = 64);

}  // namespace csslab
