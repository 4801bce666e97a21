#pragma once

#include <complex>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "rlab/log_complex.hpp"
#include "rlab/potential.hpp"

namespace rlab {

enum class BoundaryKind { RegularAtZero, Outgoing, DirichletEigenfunction };

struct SolutionParams {
  double m = 0.0;
  double h = 0.0;
  double E = 0.0;
  std::string potential;
};

struct IntegrationOptions {
  double rtol = 1e-10;
  /// Renormalize once |log| of the running mantissa passes this.
  double renorm_threshold = 50.0;
  std::size_t max_steps = 20'000'000;
  /// Liouville-Green accuracy target that fixes where the outgoing solution starts.
  double lg_epsilon = 1e-4;
  /// Lower bound for the outgoing start radius.
  double outgoing_start_min = 0.0;
};

/// Solution of -h^2 u'' + (V_m - E) u = 0 stored as u and h u' on a grid.
/// Off-grid queries are answered by integrating from the nearest stored node,
/// so they carry the integrator's accuracy rather than an interpolant's.
class RadialSolution {
 public:
  std::vector<double> grid;
  std::vector<LogComplex> values;   // u
  std::vector<LogComplex> dvalues;  // h u'
  BoundaryKind boundary_kind = BoundaryKind::RegularAtZero;
  SolutionParams params;

  RadialSolution() = default;
  RadialSolution(std::shared_ptr<const EffectivePotential> ode, IntegrationOptions options)
      : ode_(std::move(ode)), options_(options) {}

  double r_lo() const { return grid.front(); }
  double r_hi() const { return grid.back(); }

  /// (u(r), h u'(r)); OutOfGrid outside [r_lo, r_hi].
  std::pair<LogComplex, LogComplex> state_at(double r) const;
  LogComplex value_at(double r) const { return state_at(r).first; }

  /// Same solution multiplied by a constant.
  RadialSolution scaled(LogComplex factor) const;

  const EffectivePotential& effective_potential() const { return *ode_; }
  const IntegrationOptions& options() const { return options_; }

 private:
  std::shared_ptr<const EffectivePotential> ode_;
  IntegrationOptions options_;
};

/// Recessive solution at the origin, u ~ r^alpha, integrated outward to r_max.
/// Every entry of `nodes` inside (r_min, r_max] becomes an exact grid node.
RadialSolution integrate_regular(const RadialPotential& V0, double m, double h, double E,
                                 double r_max, const std::vector<double>& nodes = {},
                                 const IntegrationOptions& options = {});

/// Outgoing solution (asymptotic to a multiple of exp(i r sqrt(E) / h)),
/// started from the Liouville-Green form far out and integrated inward to
/// r_min_target.
RadialSolution integrate_outgoing(const RadialPotential& V0, double m, double h, double E,
                                  double r_min_target, const std::vector<double>& nodes = {},
                                  const IntegrationOptions& options = {});

/// Solution with u(r_dirichlet) = 0, h u'(r_dirichlet) = 1, integrated inward
/// to r_lo and outward to r_hi. At a Dirichlet eigenvalue this is the
/// eigenfunction extended past r_dirichlet; integrating away from the zero
/// avoids the exp(2S/h) loss a shot from the origin suffers across a barrier.
RadialSolution integrate_dirichlet(const RadialPotential& V0, double m, double h, double E,
                                   double r_dirichlet, double r_lo, double r_hi,
                                   const std::vector<double>& nodes = {},
                                   const IntegrationOptions& options = {});

/// Radius where integrate_outgoing starts for these parameters.
double outgoing_start_radius(const EffectivePotential& Vm, double h, double E,
                             double r_min_target, const IntegrationOptions& options = {});

/// Radius where integrate_regular starts.
double regular_start_radius(const EffectivePotential& Vm, double E);

struct WronskianResult {
  LogComplex value;
  double max_relative_deviation = 0.0;
  std::size_t nodes_used = 0;
};

/// u0 u1' - u0' u1 at every shared grid node r >= r_from; median returned.
/// Where both solutions grow in the same direction (inside a barrier at a
/// trapped energy) the difference cancels, so r_from should skip that zone.
WronskianResult wronskian(const RadialSolution& u0, const RadialSolution& u1, double r_from = 0.0);

struct KernelValue {
  LogComplex value;
  double r = 0.0;
  double rp = 0.0;
  SolutionParams params;
  LogComplex wronskian;
};

/// K(r, r') = -u0(min) u1(max) / (h^2 W).
KernelValue kernel(const RadialSolution& u0, const RadialSolution& u1, const LogComplex& W,
                   double r, double rp);

/// Both distinguished solutions for one (V0, m, h, E), sharing the given nodes.
class ResolventKernel {
 public:
  ResolventKernel(const RadialPotential& V0, double m, double h, double E,
                  std::vector<double> nodes, const IntegrationOptions& options = {});

  /// Kernel with a prebuilt u0 (e.g. from integrate_dirichlet); `nodes` must
  /// be grid nodes of u0 so the Wronskian has shared points. Only nodes at
  /// or beyond wronskian_from enter the Wronskian.
  ResolventKernel(RadialSolution u0, const RadialPotential& V0, std::vector<double> nodes,
                  const IntegrationOptions& options = {}, double wronskian_from = 0.0);

  /// Outgoing kernel, K(r, r').
  KernelValue outgoing(double r, double rp) const;
  /// Incoming kernel, conj K(r, r').
  KernelValue incoming(double r, double rp) const;

  const RadialSolution& regular() const { return u0_; }
  const RadialSolution& outgoing_solution() const { return u1_; }
  const WronskianResult& wronskian() const { return w_; }

 private:
  RadialSolution u0_;
  RadialSolution u1_;
  WronskianResult w_;
};

/// CSV with columns r, log|u|, phase, log|hu'|, phase'.
void write_solution_csv(const RadialSolution& u, std::ostream& out);

}  // namespace rlab
