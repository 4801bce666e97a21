#pragma once

#include <vector>

#include "rlab/potential.hpp"
#include "rlab/radial_ode.hpp"

namespace rlab {

struct EigenResult {
  double E = 0.0;
  /// Final shooting bracket relative to the energy scale. |u(r2)| itself is
  /// useless here: it moves by exp(2S/h) times the energy error.
  double residual = 0.0;
  int node_count = 0;
  double h = 0.0;
  double m = 0.0;
  double r2 = 0.0;
};

/// Zeros of a real solution in (r_lo, r_hi), counted from sign changes on its grid.
int count_nodes(const RadialSolution& u);

/// Bottom of the spectrum of -h^2 d^2 + V0 + m r^{-2} on (0, r2) with u(r2) = 0,
/// searched in [E_lo, E_hi]. Shooting with a node-count guard; bisection, then
/// secant once the bracket is narrower than 1e-6 |E_lo|, to 1e-12 |E_lo|.
EigenResult dirichlet_ground_energy(const RadialPotential& V0, double m, double h, double E_lo,
                                    double E_hi, double r2, const IntegrationOptions& options = {});

/// Smooth cutoff: 1 on |r - center| <= half_width / 2, 0 beyond half_width.
struct SmoothBump {
  double center = 0.0;
  double half_width = 0.0;
  double operator()(double r) const;
  double derivative(double r) const;
};

struct QuasimodeParams {
  double alpha = 0.0;
  double r1 = 0.0;
  SmoothBump cutoff;
};

/// alpha = sqrt(V_{M0}''(r1) / 2), cutoff half-width min(r2 - r1, r1) / 2.
QuasimodeParams default_quasimode(const RadialPotential& V0, const ThresholdData& t);

/// <P_m w, w> / <w, w> for w = exp(-alpha (r - r1)^2 / 2h) chi(r). By min-max
/// this bounds the Dirichlet ground energy on (0, r2) from above.
double rayleigh_quotient_bound(const RadialPotential& V0, double m, double h,
                               const QuasimodeParams& q, double r2);

struct ResonantMode {
  int j = 0;  // spherical-harmonic degree
  double sigma = 0.0;
  double h = 0.0;
  double m = 0.0;
  double M0_gap = 0.0;  // M0 - m
  double residual = 0.0;  // final bracket in lambda = h^{-2}, relative
  /// 4 sigma + (n-1)(n-3) <= 3: the radial operator may need a boundary condition at 0.
  bool self_adjointness_window = false;
};

/// For each degree j, h_j^{-2} is the ground state of
/// (E0 - V0)^{-1} (-d^2 + (sigma_j + (n-1)(n-3)/4) r^{-2}) on (0, r2) with
/// Dirichlet data at r2, and m_j = h_j^2 (sigma_j + (n-1)(n-3)/4).
std::vector<ResonantMode> resonant_sequence_hj(const RadialPotential& V0, const ThresholdData& t,
                                               int n, int j_first, int j_last,
                                               const IntegrationOptions& options = {});

}  // namespace rlab
