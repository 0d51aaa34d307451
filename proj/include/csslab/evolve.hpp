#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "csslab/gauge.hpp"
#include "csslab/grid.hpp"

namespace csslab {

struct StepOptions {
  int max_iter = 8;        // Picard cap per step
  double tol = 1e-12;      // midpoint residual target
  double fail_tol = 1e-6;  // residual above this after the cap is a hard failure
  bool close_tail = true;  // power-law closure of A_0 beyond r_max
};

struct StepStats {
  int iterations = 0;
  double residual = 0;
  bool converged = true;
};

/// Implicit midpoint for i u_t = K u + V(u) u, with K the Galerkin Laplacian
/// W^-1 (S + k^2 diag(w / r^2)) and V real. The potential is frozen at the
/// midpoint iterate and relaxed by Picard iteration; each iterate is a banded
/// complex solve. W-norm conservation is exact up to the linear solve.
class Propagator {
 public:
  using Potential = std::function<RVec(const CVec&)>;
  Propagator(GridPtr g, int laplace_index, Potential potential, StepOptions opt = {});

  StepStats step(CVec& u, double dt);
  const RadialGrid& grid() const { return *g_; }
  const StepOptions& options() const { return opt_; }
  // K u, for consistency checks.
  CVec apply_laplacian(const CVec& u) const;

 private:
  GridPtr g_;
  Potential pot_;
  StepOptions opt_;
  int band_ = 0;
  Eigen::MatrixXd sband_;  // stiffness in LAPACK band layout, rows kl..3kl
  Eigen::SparseMatrix<double> s_;
  CVec last_out_, last_mid_;
  double last_dt_ = 0;
};

std::shared_ptr<Propagator> css_propagator(GridPtr g, int index, StepOptions opt = {});

enum class ZMode { tilde, potential };
// External potential 4(m+1)/r^2 - 4(m+1) A_theta[z]/r^2 + 2(m+1) int_r^inf |z|^2 dr'/r'.
RVec z_external_potential(const RadialGrid& g, const CVec& z, bool close_tail = true);
std::shared_ptr<Propagator> zcss_propagator(GridPtr g, ZMode mode, StepOptions opt = {});

struct MonitorRecord {
  double t = 0, mass = 0, energy = 0, phi = 0, weighted_mass = 0, flux = 0;
};
MonitorRecord monitors(const RadialGrid& g, const CVec& u, int index, double t = 0);

struct EvolutionState {
  double t = 0;
  RadialField u;
  GaugeData gauge;
  std::shared_ptr<Propagator> stepper;
  StepStats last;
  int unconverged_steps = 0;
};
EvolutionState make_state(const RadialField& u, double t, StepOptions opt = {});
EvolutionState step_css(EvolutionState s, double dt);
MonitorRecord monitors(const EvolutionState& s);

struct ZState {
  double t = 0;
  RadialField z;  // m-equivariant radial part; equals the radial part of z~
  ZMode authoritative = ZMode::tilde;
  std::shared_ptr<Propagator> stepper;
  StepStats last;
};
ZState make_zstate(const RadialField& z, double t, ZMode mode, StepOptions opt = {});
ZState step_zcss(ZState s, double dt, ZMode mode);

// Exact modulated solution e^{i gamma}/lambda Q^eta_b(r/lambda) with
// lambda = <t>, gamma = theta_eta atan(t/eta), b = -t.
struct ExactModulation {
  double lambda, gamma, b;
};
ExactModulation exact_modulation(double t, double eta, double theta_eta);
CVec modulated_profile(const RadialGrid& g, int m, double eta, double theta_eta, double t, double tol = 1e-12);

struct TrackPoint {
  double t = 0, rel_error = 0, mass_drift = 0;
};
struct ExactTrackReport {
  double eta = 0, theta_eta = 0;
  std::vector<TrackPoint> points;
  double max_rel_error = 0;
};
ExactTrackReport evolve_modulated_exact(double eta, double t0, double t1, double dt, GridPtr g, int samples = 12,
                                        StepOptions opt = {});

}  // namespace csslab
