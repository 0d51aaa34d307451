#pragma once

#include "csslab/grid.hpp"

namespace csslab {

// Closed-form static solution and its radial derivative.
double q_value(int m, double r);
double q_deriv(int m, double r);
// ||rQ||^2 = 8 pi^2 / sin(pi/(m+1)) and ||psi||^2.
double rq_norm_sq(int m);
double psi_norm_sq(int m);

RadialField q_profile(GridPtr g);
RadialField lambda_q_profile(GridPtr g);  // closed form of Q + r Q_r
RadialField pseudoconformal_phase(const RadialField& f, double b);
CVec pseudoconformal_phase(const RadialGrid& g, const CVec& f, double b);
RadialField s_explicit(double t, GridPtr g);
RadialField psi_profile(GridPtr g);

struct RhoSolution {
  RadialField rho;
  RVec rho_tilde;  // rho / Q
};
// Forward substitution on the discretized Volterra equation for rho / Q.
RhoSolution rho_solve(GridPtr g);

/// Modified profile: D_+ P = 0 with the connection of Q_eta = e^{-eta r^2/4} P,
/// integrated for h = P / r^m from the origin with h(0) = sqrt(8)(m+1).
class QEtaShooter {
 public:
  QEtaShooter(int m, double eta, double tol = 1e-12);
  // P at sorted nonnegative radii; throws NumericalError if P blows up.
  RVec p_at(const RVec& radii) const;
  RVec q_at(const RVec& radii) const;
  // -a(inf) - (m+1), from the connection at large radius.
  double theta_from_connection() const;
  int m() const { return m_; }
  double eta() const { return eta_; }

 private:
  int m_;
  double eta_, tol_;
};

struct QEtaSolution {
  RadialField q_eta, p_eta;
  double theta_eta = 0;   // from the grid mass of q_eta
  double theta_ode = 0;   // from the integrated connection
  double r_eta = 0;       // (B eta)^{-1/2}
  double residual = 0;    // L2 norm of the second-order equation
  double residual_rel = 0;
};
QEtaSolution q_eta_solve(GridPtr g, double eta, double B = 10.0, double tol = 1e-12);

// L_{Q_eta}^* D_+ Q_eta + eta theta Q_eta + eta^2 r^2/4 Q_eta.
CVec second_order_residual(const RadialGrid& g, const CVec& q_eta, double eta, double theta);

struct ProfileBundle {
  int m = 1;
  double eta = 0;
  RadialField Q, LambdaQ, psi, rho, Q_eta, P_eta;
  RVec rho_tilde;
  double theta_eta = 0, R_eta = 0, B = 10;
  double q_eta_residual = 0;
};
ProfileBundle build_profiles(GridPtr g, double eta, double B = 10.0, double tol = 1e-12);

}  // namespace csslab
