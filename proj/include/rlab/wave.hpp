#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rlab/modes.hpp"
#include "rlab/potential.hpp"

namespace rlab {

/// Radial wavespeed c0 > 0 with derivatives to third order; c0 = kappa for r >= rho.
struct WaveSpeedProfile {
  using Fn = std::function<double(double)>;
  std::string name;
  Fn c0;
  std::array<Fn, 3> derivatives;
  double rho = 1.0;
  double kappa = 1.0;
  /// Radii where c0 is only C^3 (skipped by derivative checks).
  std::vector<double> kinks;

  double operator()(double r) const { return r >= rho ? kappa : c0(r); }
  /// k in {0, 1, 2, 3}
  double deriv(double r, int k) const;
  /// Throws InvalidArgument if c0 <= 0 somewhere or c0 != kappa at rho.
  void validate() const;
};

WaveSpeedProfile constant_wavespeed(double kappa = 1.0, double rho = 1.0);

/// c0 = 1 - s psi(r) with psi = 1 on [0, flat], a C^3 step down to 0 at
/// edge < rho = 1, and kappa = 1.
WaveSpeedProfile dipped_wavespeed(double s, double flat = 0.75, double edge = 0.99);

/// V0 = kappa^{-2} - c0^{-2}; the matching energy is kappa^{-2}.
RadialPotential equivalent_potential(const WaveSpeedProfile& c);

struct WaveThresholds {
  double R_c = 0.0;
  double r_max = 0.0;  // argmax of r / c0 on [0, rho]
  double r1_equiv = 0.0;
  double r2_equiv = 0.0;
  double E0 = 0.0;
  double M0 = 0.0;
  /// min over [0, rho] of (r / c0)'.
  double min_slope = 0.0;
  bool trapping_ok = false;
};

/// R_c = kappa max_{[0, rho]} r / c0, cross-checked against r2 of the
/// equivalent Schrodinger problem. NoTrapping if R_c <= rho.
WaveThresholds rc_threshold(const WaveSpeedProfile& c);

struct CorrespondenceReport {
  double max_relative_discrepancy = 0.0;
  /// Same comparison with the c^{-2} lambda^{-2} factor left out.
  double discrepancy_without_factor = 0.0;
  std::size_t pairs = 0;
};

/// Kernel of (-c^2 Delta - (lambda + i0)^2)^{-1} on one angular mode, built
/// directly from the wavespeed ODE, against the Schrodinger kernel with
/// h = 1/lambda, V = kappa^{-2} - c^{-2} times c(r')^{-2} lambda^{-2}.
CorrespondenceReport helmholtz_correspondence_check(const WaveSpeedProfile& c, double lambda,
                                                    const CutoffAnnulus& chi,
                                                    const std::vector<double>& rp_samples,
                                                    int n = 3, int l = 0);

struct BlockNorm {
  double log_helmholtz = 0.0;  // log || chi (-c^2 Delta - lambda^2)^{-1} chi ||_{L^2}
  /// Logs of the four blocks in energy-space units at frequency lambda.
  std::array<double, 4> log_blocks{};
  double log_norm = 0.0;  // max of the blocks
  int l_best = 0;
};

struct BlockNormOptions {
  Direction direction = Direction::Outgoing;
  int n = 3;
  TruncationPolicy policy;
  ModeNormOptions mode_options;
  /// Mode whose u0 is anchored at R_c (resonant frequencies lambda_j).
  std::optional<int> anchored_l;
};

/// Energy-space surrogate for || chi (B - lambda -+ i0)^{-1} chi ||.
BlockNorm block_resolvent_norm(const WaveSpeedProfile& c, double lambda, const CutoffAnnulus& chi,
                               const BlockNormOptions& options = {});

struct EvolutionOptions {
  /// Resolution frequency: dr = min(1 / (10 probe), rho / 400).
  double probe_frequency = 10.0;
  double r_big = 0.0;  // 0 picks 4 max(R_c, rho, U.outer)
  double cfl = 0.4;
  /// Overrides dt (for CFL checks); 0 uses cfl dr / max c0.
  double dt = 0.0;
  bool sponge = true;
  double sponge_fraction = 0.2;
  double sponge_strength = 0.0;  // 0 picks 20 max c0 / sponge width
  std::size_t record_every = 10;
};

struct EvolutionSample {
  double t = 0.0;
  double energy_U = 0.0;
  double integral_U = 0.0;
  double energy_total = 0.0;
};

struct EvolutionResult {
  std::vector<EvolutionSample> series;
  double dr = 0.0;
  double dt = 0.0;
  double r_min = 0.0;
  double r_big = 0.0;
  /// First time the solution exceeds 1e-12 of its peak inside the sponge.
  double sponge_contact_time = 0.0;
};

/// Leapfrog for v_tt = c0^2 (v_rr - nu r^{-2} v), nu = sigma_l + (n-1)(n-3)/4,
/// v = 0 at r_min, sponge near r_big. Energy density |v_r|^2 + nu r^{-2} v^2 + c^{-2} v_t^2.
EvolutionResult mode_energy_evolution(const WaveSpeedProfile& c, int n, int l,
                                      const std::function<double(double)>& w0,
                                      const std::function<double(double)>& w1, double T,
                                      const CutoffAnnulus& U, const EvolutionOptions& options = {});

/// Runs the undamped scheme forward N steps, reverses velocity, runs N steps
/// back; returns max |v_back - v_initial| / max |v_initial|.
double time_reversal_residual(const WaveSpeedProfile& c, int n, int l,
                              const std::function<double(double)>& w0, double T,
                              const EvolutionOptions& options = {});

}  // namespace rlab
