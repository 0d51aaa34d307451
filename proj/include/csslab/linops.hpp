#pragma once

#include <cstdint>
#include <vector>

#include "csslab/grid.hpp"

namespace csslab {

// D_+^{(w)} f = f_r - (index + A_theta[w]) f / r.
CVec d_plus(const RadialGrid& g, const CVec& w, const CVec& f, int index);
// Formal real adjoint: -f_r - (index + 1 + A_theta[w]) f / r.
CVec d_plus_star(const RadialGrid& g, const CVec& w, const CVec& f, int index);
RadialField d_plus(const RadialField& u, const RadialField& f);

// B_w f = (1/r) int_0^r Re(conj(w) f) r' dr' (a real multiplier).
RVec b_op(const RadialGrid& g, const CVec& w, const CVec& f);
// B_w^* f = w int_r^inf Re f dr'.
CVec b_star(const RadialGrid& g, const CVec& w, const CVec& f);

CVec l_w(const RadialGrid& g, const CVec& w, const CVec& f, int index);
CVec l_w_star(const RadialGrid& g, const CVec& w, const CVec& f, int index);
RadialField l_w(const RadialField& w, const RadialField& f);
RadialField l_w_star(const RadialField& w, const RadialField& f);

struct LinearizedContext {
  GridPtr grid;
  CVec w;
  int index = 1;
  RVec a_theta;
  CVec dplus_w;  // D_+^{(w)} w
  bool self_dual = false;
  std::uint64_t checksum = 0;
};
LinearizedContext make_context(const RadialField& w, double self_dual_tol = 1e-6);

// Full linearized operator: L*L eps + [(B_w eps) + B_w^*[conj(eps) .] + B_eps^*[conj(w) .]] D_+^{(w)} w.
CVec lcal_apply(const LinearizedContext& ctx, const CVec& eps);
RadialField lcal_apply(const LinearizedContext& ctx, const RadialField& eps);

struct ConjugationResiduals {
  double phase_bogomolnyi = 0;  // conjugation of L*D f
  double phase_linearized = 0;  // conjugation of the linearized operator
  double algebraic = 0;         // -L*D Q_b + i b Lambda Q_b - b^2 r^2/4 Q_b, with f as Q
  double ladder = 0;            // Lcal_{Q_b} i Q_b + b Lambda Q_b - b^2 d_b Q_b
};
// Residual norms relative to the L2 norm of the largest term on each line.
ConjugationResiduals conjugation_check(double b, const RadialField& f, const RadialField& w,
                                       const RadialField& eps);

struct CoercivityReport {
  double c_est = 0;                    // constrained minimum Rayleigh quotient
  int near_kernel = 0;                 // unconstrained quotients below kernel_tol
  std::vector<double> lowest;          // smallest unconstrained quotients
  double upper = 0;                    // largest quotient (boundedness constant squared)
  double nondegeneracy = 0;            // det of the 2x2 pairing matrix
};
// Rayleigh quotients of ||L_Q f||^2 / ||f||^2_{H^1_m} on the grid, with and without
// orthogonality to Z_re (real part) and i Z_im (imaginary part).
CoercivityReport coercivity_estimate(const RadialField& z_re, const RadialField& z_im, int n_modes = 6,
                                     double kernel_tol = 1e-6);

// Smooth bump supported on [1/2, 2].
double bump(double r);
// Default pair: the bump normalized so (Z_re, Lambda Q)_r = (Z_im, Q)_r = 1.
struct ZPair {
  RadialField z_re, z_im;
  double re_scale = 1, im_scale = 1;  // Z = bump * scale
};
ZPair default_z_pair(GridPtr g);

}  // namespace csslab
