#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rlab {

/// A radial profile V0(r) with closed-form derivatives up to third order.
///
/// Supplied derivatives are cross-checked against Richardson-extrapolated
/// central differences at construction (100 sample points, relative error
/// below 1e-6), so a wrong derivative closure fails early instead of silently
/// corrupting turning-point and error-control computations downstream.
class RadialPotential {
 public:
  using Fn = std::function<double(double)>;

  RadialPotential(std::string name, Fn value, std::array<Fn, 3> derivatives,
                  std::optional<double> support_radius, double lower_bound,
                  bool validate_derivatives = true, std::vector<double> kinks = {});

  double eval(double r) const { return value_(r); }
  double operator()(double r) const { return value_(r); }
  /// k in {0, 1, 2, 3}
  double deriv(double r, int k) const;

  const std::string& name() const noexcept { return name_; }
  /// Radius beyond which V0 vanishes identically; nullopt when unbounded.
  std::optional<double> support_radius() const noexcept { return support_; }
  double lower_bound() const noexcept { return lower_bound_; }

  /// Largest relative derivative mismatch found by the finite-difference check.
  double max_derivative_mismatch() const noexcept { return derivative_mismatch_; }

  /// max over a log-spaced grid on [1e-6, 1e6] of r^{2+k} |V0^{(k)}(r)|.
  std::array<double, 4> regularity_bounds(std::size_t samples = 2000) const;

 private:
  double check_derivatives() const;

  std::string name_;
  Fn value_;
  std::array<Fn, 3> derivs_;
  std::optional<double> support_;
  double lower_bound_;
  std::vector<double> kinks_;
  double derivative_mismatch_ = 0.0;
};

/// V0 = 0 (support declared as [0, 1) so threshold scans have a domain).
RadialPotential zero_potential();

/// V0(r) = -A (1 - (r/rho)^2)^4 for r < rho, 0 beyond.
RadialPotential bump_quartic(double amplitude, double support_radius = 1.0);

/// V0(r) = alpha^2 (r - center)^2 + offset, unbounded support.
RadialPotential parabola(double alpha, double center, double offset);

/// Piecewise polynomial: on [b_i, b_{i+1}) V0 = sum_k c_{i,k} (r - b_i)^k,
/// zero for r >= b_last, and piece 0 extended down to r = 0.
RadialPotential piecewise_polynomial(std::vector<double> breakpoints,
                                     std::vector<std::vector<double>> coefficients);

/// V_m(r) = V0(r) + m r^{-2}.
class EffectivePotential {
 public:
  EffectivePotential(RadialPotential base, double m) : base_(std::move(base)), m_(m) {}

  double eval(double r) const { return base_.eval(r) + m_ / (r * r); }
  double operator()(double r) const { return eval(r); }
  double deriv(double r, int k) const;

  const RadialPotential& base() const noexcept { return base_; }
  double m() const noexcept { return m_; }

 private:
  RadialPotential base_;
  double m_;
};

struct ThresholdOptions {
  std::size_t grid_points = 100000;
  double bracket_width = 1e-10;
  double root_tol = 1e-10;
  /// Scan extent for potentials without compact support.
  double scan_radius = 50.0;
};

struct AssumptionFlags {
  bool M0_finite = false;
  bool monotone_tail = false;
};

struct ThresholdData {
  double E0 = 0.0;
  double M0 = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  /// r2 from bisection on the increasing tail of Phi (always computed).
  double r2_bisection = 0.0;
  /// sqrt(M0/E0) when the support is compact and r2 lies beyond it, else NaN.
  double r2_closed_form = 0.0;
  bool closed_form_used = false;
  std::vector<std::pair<double, double>> phi_profile;
  AssumptionFlags assumption_flags;
};

/// Phi(r) = r^2 (E0 - V0(r)).
double compute_phi(const RadialPotential& V0, double E0, double r);
/// Phi'(r).
double compute_phi_prime(const RadialPotential& V0, double E0, double r);

ThresholdData compute_thresholds(const RadialPotential& V0, double E0,
                                 const ThresholdOptions& options = {});

/// The four Phi properties that must hold for any valid ThresholdData.
struct PhiQuartet {
  bool tail_increasing = false;
  bool endpoints_match = false;
  bool interior_below = false;
  bool below_up_to_r2 = false;
  double endpoint_error = 0.0;
  bool all() const noexcept {
    return tail_increasing && endpoints_match && interior_below && below_up_to_r2;
  }
};
PhiQuartet check_phi_quartet(const RadialPotential& V0, const ThresholdData& t,
                             std::size_t samples = 100000, double root_tol = 1e-10);

struct TurningPoint {
  double R = 0.0;
  /// (R + 1/|V'(R)|) / sqrt(m), reported for comparison across m.
  double sqrt_m_constant = 0.0;
};

/// Outermost-from-r_lower root of V_m(r) = E where V_m crosses E downward.
TurningPoint turning_point(const EffectivePotential& Vm, double E, double r_lower,
                           double root_tol = 1e-10);

/// S = int_r^R sqrt(V_m - E) dr'.
double agmon_distance(const EffectivePotential& Vm, double E, double r, double R,
                      double rel_tol = 1e-10);

/// int_a^b sqrt(|V_m - E|) dr'. Endpoints may be turning points (square-root
/// substitution at both ends); used for the allowed-side phase as well.
double action_integral(const EffectivePotential& Vm, double E, double a, double b,
                       double rel_tol = 1e-10);

}  // namespace rlab
