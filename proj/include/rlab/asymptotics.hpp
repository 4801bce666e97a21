#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <optional>
#include <string_view>

#include "rlab/potential.hpp"
#include "rlab/radial_ode.hpp"

namespace rlab {

/// m' = m + h^2/4 (single turning point analysis) or m' = m (trapped well).
enum class FrameConvention { ShiftedMomentum, PlainMomentum };

/// Liouville-Green / Airy frame around the outermost turning point R of V_{m'} = E.
class LGFrame {
 public:
  LGFrame(const RadialPotential& V0, double m, double h, double E,
          FrameConvention convention = FrameConvention::ShiftedMomentum);

  double m() const { return m_; }
  double m_prime() const { return vmp_->m(); }
  double h() const { return h_; }
  double E() const { return E_; }
  /// NaN when V_{m'} - E has no sign change.
  double R() const { return R_; }
  bool has_turning_point() const { return !std::isnan(R_); }
  void require_turning_point() const;
  /// Outermost root of V_m = E (equals R for the plain convention).
  double R_m() const { return R_m_; }
  const EffectivePotential& vm_prime() const { return *vmp_; }
  const EffectivePotential& vm() const { return *vm_; }

  /// +-|3/(2h) int_R^r sqrt|E - V_{m'}||^{2/3}, sign of r - R.
  double zeta(double r) const;
  /// -m^{-1/3} h^{2/3} zeta(r)
  double zeta_olver(double r) const;
  /// int_R^r sqrt|E - V_{m'}| (negative for r < R).
  double phase_integral(double r, double rel_tol = 1e-12) const;

  /// f = m^{-1}(V_{m'} - E) and its derivatives (k <= 3).
  double f(double r, int k = 0) const;
  double g(double r) const { return -0.25 / (r * r); }

 private:
  std::shared_ptr<const EffectivePotential> vmp_;
  std::shared_ptr<const EffectivePotential> vm_;
  double m_, h_, E_, R_, R_m_;
};

/// Largest root of V_m(r) = E, approached from the allowed tail.
double outermost_turning_point(const EffectivePotential& Vm, double E, double root_tol = 1e-12);

enum class KernelRegime { AllowedAllowed, Turning, ForbiddenAllowed, ForbiddenForbidden };
enum class ErrorOrder { OrderH, OrderHOverSqrtM, OrderHCubeRoot };
enum class KernelSetting { NoTurning, OneTurning, Trapped };

std::string_view to_string(KernelRegime regime) noexcept;

struct RegimeLimits {
  double r1_plus = 0.0;
  double r2_minus = 0.0;
  double r2_plus = 0.0;
};

/// Limits placed 10% of the barrier width inside the forbidden zone of V_m = E
/// (and 10% of r2 - r1 beyond max(R, r2) for the allowed side).
RegimeLimits default_regime_limits(const LGFrame& frame, const ThresholdData& t);

struct KernelPrediction {
  KernelRegime regime = KernelRegime::AllowedAllowed;
  double log_mag = 0.0;
  /// Only the trapped forbidden/forbidden asymptotic fixes the phase.
  std::optional<double> phase;
  bool is_upper_bound = false;
  ErrorOrder claimed_error = ErrorOrder::OrderH;
};

/// Leading-order |K| (or its upper bound) for the setting. The Agmon
/// distance is taken for V_m at E up to R = max V_m^{-1}(E).
KernelPrediction predict_kernel(const LGFrame& frame, const RegimeLimits& limits,
                                KernelSetting setting, double r, double rp, double C_A = 1.0 / 3.14159265358979323846);

struct ErrorControlResult {
  double inner = 0.0;  // (0, R - delta sqrt(m))
  double mid = 0.0;    // R +- delta sqrt(m)
  double outer = 0.0;  // (R + delta sqrt(m), inf)
  double total() const { return inner + mid + outer; }
};

/// Olver's error-control integrand |G(r)|.
double error_control_integrand(const LGFrame& frame, double r);

/// int_0^inf |G| split at R +- delta sqrt(m).
ErrorControlResult error_control_integral(const LGFrame& frame, double delta = 0.25,
                                          double rel_tol = 1e-8);

/// The fitted coefficients are exp(log_scale) * (A, B).
struct ConnectionFit {
  std::complex<double> A;
  std::complex<double> B;
  double log_scale = 0.0;
  double residual = 0.0;  // relative l2 residual of the fit
  double condition = 0.0;
};

/// Least-squares fit of u = (zeta/(E - V_{m'}))^{1/4} (A Ai(-zeta) + B Bi(-zeta))
/// on the allowed-side window zeta in [zeta_lo, zeta_hi]. The fit sees u in
/// the scale it is stored in; see the normalizers below.
ConnectionFit connection_coefficients(const RadialSolution& u, const LGFrame& frame,
                                      double zeta_lo = 2.0, double zeta_hi = 8.0,
                                      int samples = 64);

/// u1 rescaled to (E - V_{m'})^{-1/4} exp((i/h) int_R^r sqrt(E - V_{m'})) at its outer end.
RadialSolution normalize_outgoing(const RadialSolution& u1, const LGFrame& frame);

/// Divides (A, B) of a real solution by sqrt(A^2 + B^2), sign chosen so A >= 0.
ConnectionFit normalize_real_fit(const ConnectionFit& fit);

}  // namespace rlab
