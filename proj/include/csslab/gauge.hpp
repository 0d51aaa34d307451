#pragma once

#include <cstdint>
#include <limits>

#include "csslab/grid.hpp"

namespace csslab {

struct GaugeData {
  RVec a_theta;
  RVec a_zero;
  double tail = 0.0;       // analytic closure added to a_zero for r > r_max
  bool tail_converges = true;
  std::uint64_t checksum = 0;
};

std::uint64_t checksum(const CVec& v);

// Estimate of int_{r_max}^inf |u|^2 dr/r from a power-law fit over the last element.
double far_tail(const RadialGrid& g, const CVec& u, bool& converges);

// A_theta = -1/2 int_0^r |u|^2 r' dr'.
RVec a_theta(const RadialGrid& g, const CVec& u);
// A_0 = -int_r^inf (index + A_theta) |u|^2 dr'/r'. The part beyond r_max is
// closed by a power-law fit of |u|^2 over the last element when close_tail is set.
GaugeData gauge_data(const RadialGrid& g, const CVec& u, int index, bool close_tail = true);
RVec a_zero(const RadialGrid& g, const CVec& u, const RVec& a_theta, int index, bool close_tail = true);

// Real potential V with N(u) = V u.
RVec css_potential(const RadialGrid& g, const CVec& u, int index, bool close_tail = true);
CVec nonlinearity(const RadialGrid& g, const CVec& u, int index, bool close_tail = true);
RadialField nonlinearity(const RadialField& u);

// Multilinear pieces of the nonlinearity.
CVec n30(const RadialGrid& g, const CVec& p1, const CVec& p2, const CVec& p3);
CVec n31(const RadialGrid& g, int index, const CVec& p1, const CVec& p2, const CVec& p3);
CVec n32(const RadialGrid& g, int index, const CVec& p1, const CVec& p2, const CVec& p3);
CVec n51(const RadialGrid& g, const CVec& p1, const CVec& p2, const CVec& p3, const CVec& p4, const CVec& p5);
CVec n52(const RadialGrid& g, const CVec& p1, const CVec& p2, const CVec& p3, const CVec& p4, const CVec& p5);

/// Truncated virial weight phi_A(r) = A^2 phi(r/A). phi' = r on [0,1], 3 - e^-r on
/// [2, inf), joined by the quintic in phi' that matches two derivatives at each end.
struct VirialWeight {
  double A = std::numeric_limits<double>::infinity();
  RVec phi, dphi, lap, bilap;
};

struct WeightPoint {
  double phi, dphi, ddphi, lap, bilap;
};
WeightPoint virial_weight_at(double r, double A);
VirialWeight virial_weight(const RadialGrid& g, double A);

double form_m40(const RadialGrid& g, const VirialWeight& w, const CVec& p1, const CVec& p2, const CVec& p3,
                const CVec& p4);
double form_m41(const RadialGrid& g, const VirialWeight& w, const CVec& p1, const CVec& p2, const CVec& p3,
                const CVec& p4);
double form_m6(const RadialGrid& g, const VirialWeight& w, const CVec& p1, const CVec& p2, const CVec& p3,
               const CVec& p4, const CVec& p5, const CVec& p6);

struct FormsM {
  double m40 = 0, m41 = 0, m6 = 0;
};
FormsM forms_M(const RadialGrid& g, double A, const CVec& u);

// D_+ u with the connection of u itself: u_r - (index + A_theta[u]) u / r.
CVec bogomolnyi(const RadialGrid& g, const CVec& u, int index);

struct EnergyForms {
  double bogomolnyi = 0;  // 1/2 int |D_+ u|^2
  double expanded = 0;    // kinetic minus the quartic/sextic forms
  double kinetic = 0;     // 1/2 int |u_r|^2 + index^2 |u/r|^2
};
EnergyForms energy_forms(const RadialGrid& g, const CVec& u, int index);
// Throws NumericalError when the two forms disagree beyond tol * kinetic.
double energy(const RadialField& u, double tol = 1e-8);

}  // namespace csslab
