#include "rlab/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "rlab/airy.hpp"
#include "rlab/errors.hpp"
#include "rlab/numerics.hpp"

namespace rlab {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

double outermost_turning_point(const EffectivePotential& Vm, double E, double root_tol) {
  const auto support = Vm.base().support_radius();
  double hi = std::max(support.value_or(1.0), 1.0);
  if (Vm.m() > 0 && E > 0) hi = std::max(hi, 2.0 * std::sqrt(Vm.m() / E));
  int guard = 0;
  while (!(Vm(hi) < E)) {
    hi *= 2.0;
    if (++guard > 80) throw Error(ErrorKind::BracketNotFound, "V_m never drops below E");
  }
  double r = hi;
  while (Vm(r) < E) {
    const double next = r * (1.0 - 1e-3);
    if (next < 1e-10) throw Error(ErrorKind::BracketNotFound, "no turning point: V_m < E down to r = 0");
    if (!(Vm(next) < E))
      return numerics::bisect([&](double x) { return Vm(x) - E; }, next, r, root_tol * r);
    r = next;
  }
  return r;
}

LGFrame::LGFrame(const RadialPotential& V0, double m, double h, double E, FrameConvention convention)
    : m_(m), h_(h), E_(E) {
  if (!(h > 0)) throw Error(ErrorKind::InvalidArgument, "h must be positive");
  if (m < 0) throw Error(ErrorKind::InvalidArgument, "frame needs m >= 0");
  const double mp = convention == FrameConvention::ShiftedMomentum ? m + h * h / 4.0 : m;
  vmp_ = std::make_shared<const EffectivePotential>(V0, mp);
  vm_ = std::make_shared<const EffectivePotential>(V0, m);
  const auto outermost_or_nan = [E](const EffectivePotential& v) {
    try {
      return outermost_turning_point(v, E);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::BracketNotFound) throw;
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  // Newton polish: the error-control bracket cancels O((r - R)^{-2}) terms, so
  // R must be accurate to rounding, not just to the bisection tolerance.
  const auto polish = [E](const EffectivePotential& v, double r) {
    for (int it = 0; it < 4 && std::isfinite(r); ++it) {
      const double d = v.deriv(r, 1);
      if (d == 0.0) break;
      r -= (v(r) - E) / d;
    }
    return r;
  };
  R_ = polish(*vmp_, outermost_or_nan(*vmp_));
  R_m_ = convention == FrameConvention::PlainMomentum ? R_ : polish(*vm_, outermost_or_nan(*vm_));
}

void LGFrame::require_turning_point() const {
  if (!has_turning_point())
    throw Error(ErrorKind::RegimeUndefined, "V_m' - E has no turning point for these parameters");
}

double LGFrame::phase_integral(double r, double rel_tol) const {
  require_turning_point();
  if (r == R_) return 0.0;
  const double v = action_integral(*vmp_, E_, std::min(r, R_), std::max(r, R_), rel_tol);
  return r > R_ ? v : -v;
}

double LGFrame::zeta(double r) const {
  const double p = phase_integral(r);
  const double z = std::pow(1.5 * std::abs(p) / h_, 2.0 / 3.0);
  return p >= 0 ? z : -z;
}

double LGFrame::zeta_olver(double r) const {
  if (!(m_ > 0)) throw Error(ErrorKind::InvalidArgument, "zeta_O needs m > 0");
  return -std::pow(m_, -1.0 / 3.0) * std::pow(h_, 2.0 / 3.0) * zeta(r);
}

double LGFrame::f(double r, int k) const {
  if (!(m_ > 0)) throw Error(ErrorKind::InvalidArgument, "f = (V_m' - E)/m needs m > 0");
  return (vmp_->deriv(r, k) - (k == 0 ? E_ : 0.0)) / m_;
}

std::string_view to_string(KernelRegime regime) noexcept {
  switch (regime) {
    case KernelRegime::AllowedAllowed: return "allowed_allowed";
    case KernelRegime::Turning: return "turning";
    case KernelRegime::ForbiddenAllowed: return "forbidden_allowed";
    case KernelRegime::ForbiddenForbidden: return "forbidden_forbidden";
  }
  return "unknown";
}

RegimeLimits default_regime_limits(const LGFrame& frame, const ThresholdData& t) {
  if (std::isnan(frame.R_m())) {
    RegimeLimits out;
    out.r1_plus = out.r2_minus = std::numeric_limits<double>::quiet_NaN();
    out.r2_plus = t.r2 + 0.1 * (t.r2 - t.r1);
    return out;
  }
  const auto& vm = frame.vm();
  const double E = frame.E();
  const double R = frame.R_m();
  double inner = t.r1;
  if (vm(t.r1) < E) {
    // first point of the barrier beyond the well
    double lo = t.r1, hi = R;
    for (int i = 1; i <= 1000; ++i) {
      const double r = t.r1 + (R - t.r1) * i / 1000.0;
      if (vm(r) > E) {
        hi = r;
        break;
      }
      lo = r;
    }
    inner = numerics::bisect([&](double x) { return vm(x) - E; }, lo, hi, 1e-12);
  }
  const double width = R - inner;
  RegimeLimits out;
  out.r1_plus = inner + 0.1 * width;
  out.r2_minus = R - 0.1 * width;
  out.r2_plus = std::max(R, t.r2) + 0.1 * (t.r2 - t.r1);
  return out;
}

KernelPrediction predict_kernel(const LGFrame& frame, const RegimeLimits& limits,
                                KernelSetting setting, double r, double rp, double C_A) {
  const auto& vm = frame.vm();
  const double E = frame.E();
  const double h = frame.h();
  const auto quarter = [&](double x) { return 0.25 * std::log(std::abs(vm(x) - E)); };
  KernelPrediction p;
  switch (setting) {
    case KernelSetting::NoTurning: {
      for (double x : {r, rp})
        if (x < limits.r2_plus || !(vm(x) < E))
          throw Error(ErrorKind::RegimeUndefined,
                      "r = " + std::to_string(x) + " is not in the allowed zone beyond r2+");
      p.regime = KernelRegime::AllowedAllowed;
      p.log_mag = -std::log(h) - quarter(r) - quarter(rp);
      p.is_upper_bound = true;
      p.claimed_error = ErrorOrder::OrderH;
      return p;
    }
    case KernelSetting::OneTurning: {
      for (double x : {r, rp})
        if (vm(x) == E) throw Error(ErrorKind::RegimeUndefined, "argument sits on the turning point");
      p.regime = KernelRegime::Turning;
      p.log_mag = std::log(C_A * kPi / h) - quarter(r) - quarter(rp);
      p.is_upper_bound = true;
      p.claimed_error = ErrorOrder::OrderHOverSqrtM;
      return p;
    }
    case KernelSetting::Trapped: {
      const auto forbidden = [&](double x) { return x >= limits.r1_plus && x <= limits.r2_minus; };
      const auto allowed = [&](double x) { return x >= limits.r2_plus; };
      for (double x : {r, rp})
        if (!forbidden(x) && !allowed(x))
          throw Error(ErrorKind::RegimeUndefined,
                      "r = " + std::to_string(x) + " lies in an excluded neighbourhood");
      const double R = frame.R_m();
      if (std::isnan(R)) throw Error(ErrorKind::RegimeUndefined, "no turning point for the trapped setting");
      const auto S = [&](double x) { return agmon_distance(vm, E, x, R); };
      p.claimed_error = ErrorOrder::OrderHCubeRoot;
      if (forbidden(r) && forbidden(rp)) {
        p.regime = KernelRegime::ForbiddenForbidden;
        p.log_mag = (S(r) + S(rp)) / h - std::log(2.0 * h) - quarter(r) - quarter(rp);
        p.phase = LogComplex::wrap(kPi - kPi / 6.0);
      } else if (forbidden(r) || forbidden(rp)) {
        const double a = forbidden(r) ? r : rp;
        const double b = forbidden(r) ? rp : r;
        p.regime = KernelRegime::ForbiddenAllowed;
        p.log_mag = S(a) / h - std::log(2.0 * h) - quarter(a) - quarter(b);
      } else {
        throw Error(ErrorKind::RegimeUndefined,
                    "both arguments allowed: the trapped asymptotics do not cover this pair");
      }
      return p;
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown kernel setting");
}

// ---------------------------------------------------------------------------
// Error control

namespace {

constexpr double kSeriesWindow = 1e-3;  // |r - R| / R below which the Taylor limit is used
constexpr double kTinyRadius = 1e-6;    // r / R below which only the zeta term survives
constexpr double kNearWindow = 0.05;    // |r - R| / R below which zeta_O uses a fixed rule

double zeta_olver_from_integral(double integral_sqrt_f, bool forbidden) {
  const double z = std::pow(1.5 * std::abs(integral_sqrt_f), 2.0 / 3.0);
  return forbidden ? z : -z;
}

// int_R^r sqrt|f| with a tight tolerance: the bracket cancels to O(1) from
// O((r - R)^{-2}) terms, so zeta_O must be accurate to near machine precision.
double integral_sqrt_f(const LGFrame& frame, double r) {
  const double R = frame.R();
  const double x = r - R;
  if (std::abs(x) < kNearWindow * R) {
    // r' = R + x s^2 makes the integrand analytic in s, and the adaptive rule
    // stalls on rounding noise this close to R, so use a fixed rule instead.
    static const numerics::GaussRule rule = numerics::gauss_legendre(64, 0.0, 1.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double s = rule.nodes[i];
      sum += rule.weights[i] * std::sqrt(std::abs(frame.f(R + x * s * s))) * 2.0 * s;
    }
    return sum * std::abs(x);
  }
  return std::abs(frame.phase_integral(r, 1e-13)) / std::sqrt(frame.m());
}

}  // namespace

double error_control_integrand(const LGFrame& frame, double r) {
  const double R = frame.R();
  const double x = r - R;
  const double f0 = frame.f(r);
  if (std::abs(x) < kSeriesWindow * R) {
    const double d1 = frame.f(R, 1);
    const double beta = frame.f(R, 2) / (2.0 * d1);
    const double gamma = frame.f(R, 3) / (6.0 * d1);
    const double bracket = -16.0 * frame.g(R) + 144.0 / 35.0 * beta * beta - 48.0 / 7.0 * gamma;
    const double fabs = f0 != 0.0 ? std::abs(f0) : std::abs(d1 * x);
    if (fabs == 0.0) return 0.0;  // integrable singularity handled by the caller's substitution
    return std::abs(bracket) / std::sqrt(fabs);
  }
  const double zo = zeta_olver_from_integral(integral_sqrt_f(frame, r), r < R);
  if (r < kTinyRadius * R) return 5.0 * std::sqrt(std::abs(f0)) / std::abs(zo * zo * zo);
  const double f1 = frame.f(r, 1);
  const double f2 = frame.f(r, 2);
  const double bracket =
      5.0 * f1 * f1 / (f0 * f0) - 4.0 * f2 / f0 - 16.0 * frame.g(r) - 5.0 * f0 / (zo * zo * zo);
  return std::abs(bracket) / std::sqrt(std::abs(f0));
}

ErrorControlResult error_control_integral(const LGFrame& frame, double delta, double rel_tol) {
  frame.require_turning_point();
  if (!(delta > 0 && delta <= 1)) throw Error(ErrorKind::InvalidArgument, "delta must lie in (0, 1]");
  const double R = frame.R();
  const double w = delta * std::sqrt(frame.m());
  const double a = R - w;
  const double b = R + w;
  if (!(a > 0)) throw Error(ErrorKind::InvalidArgument, "R - delta sqrt(m) must be positive");

  ErrorControlResult out;
  // mid: r = R -+ u^2 removes the |r - R|^{-1/2} behaviour
  // split where the integrand switches to its series form so each panel is smooth
  const double umax = std::sqrt(w);
  const double useries = std::min(umax, std::sqrt(kSeriesWindow * R));
  for (double sign : {-1.0, 1.0}) {
    const auto g = [&](double u) { return 2.0 * u * error_control_integrand(frame, R + sign * u * u); };
    out.mid += numerics::integrate(g, 0.0, useries, rel_tol) +
               numerics::integrate(g, useries, umax, rel_tol);
  }

  // outer: t = 1/r
  out.outer = numerics::integrate(
      [&](double t) {
        if (t <= 0.0) return 0.0;
        return error_control_integrand(frame, 1.0 / t) / (t * t);
      },
      0.0, 1.0 / b, rel_tol);

  // inner: s = ln(R/r), t = 1/s. For s beyond s_cut, r underflows, so zeta_O
  // is continued with r^2 f -> F: int_r^{r_cut} sqrt f = sqrt(F) (s - s_cut).
  const double s_a = std::log(R / a);
  const double s_cut = 30.0;
  const double r_cut = R * std::exp(-s_cut);
  const double F = r_cut * r_cut * frame.f(r_cut);
  const double I_cut = integral_sqrt_f(frame, r_cut);
  out.inner = numerics::integrate(
      [&](double t) {
        if (t <= 0.0) return 0.0;
        const double s = 1.0 / t;
        if (s <= s_cut) {
          const double r = R * std::exp(-s);
          return error_control_integrand(frame, r) * r * s * s;
        }
        const double zo = zeta_olver_from_integral(I_cut + std::sqrt(F) * (s - s_cut), true);
        return 5.0 * std::sqrt(F) / (zo * zo * zo) * s * s;
      },
      0.0, 1.0 / s_a, rel_tol);
  return out;
}

// ---------------------------------------------------------------------------
// Connection coefficients

namespace {

double r_of_zeta(const LGFrame& frame, double z) {
  const double R = frame.R();
  double step = std::max(1e-3 * R, frame.h());
  double hi = R + step;
  int guard = 0;
  while (frame.zeta(hi) < z) {
    step *= 2.0;
    hi = R + step;
    if (++guard > 80) throw Error(ErrorKind::BracketNotFound, "zeta never reaches the fit window");
  }
  return numerics::bisect([&](double r) { return frame.zeta(r) - z; }, R, hi, 1e-13 * hi);
}

}  // namespace

ConnectionFit connection_coefficients(const RadialSolution& u, const LGFrame& frame, double zeta_lo,
                                      double zeta_hi, int samples) {
  if (!(zeta_hi > zeta_lo) || samples < 4)
    throw Error(ErrorKind::InvalidArgument, "fit window needs zeta_hi > zeta_lo and >= 4 samples");
  const double a = r_of_zeta(frame, zeta_lo);
  const double b = r_of_zeta(frame, zeta_hi);
  if (a < u.r_lo() || b > u.r_hi())
    throw Error(ErrorKind::OutOfGrid, "fit window [" + std::to_string(a) + ", " + std::to_string(b) +
                                          "] not covered by the solution");
  std::vector<double> b1(samples), b2(samples);
  std::vector<LogComplex> y(samples);
  double shift = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    const double r = a + (b - a) * k / (samples - 1);
    const double z = frame.zeta(r);
    const double pref = std::pow(z / (frame.E() - frame.vm_prime()(r)), 0.25);
    const auto ai = airy_eval(-z);
    b1[k] = pref * ai.ai.value();
    b2[k] = pref * ai.bi.value();
    y[k] = u.value_at(r);
    shift = std::max(shift, y[k].log_mag);
  }
  double g11 = 0, g12 = 0, g22 = 0;
  std::complex<double> c1 = 0, c2 = 0;
  double ynorm = 0;
  for (int k = 0; k < samples; ++k) {
    const auto yk = y[k].shifted(shift);
    g11 += b1[k] * b1[k];
    g12 += b1[k] * b2[k];
    g22 += b2[k] * b2[k];
    c1 += b1[k] * yk;
    c2 += b2[k] * yk;
    ynorm += std::norm(yk);
  }
  const double tr = g11 + g22;
  const double det = g11 * g22 - g12 * g12;
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  const double lmax = tr / 2.0 + disc;
  const double lmin = tr / 2.0 - disc;
  ConnectionFit fit;
  fit.condition = lmin > 0 ? std::sqrt(lmax / lmin) : std::numeric_limits<double>::infinity();
  if (fit.condition > 1e8)
    throw Error(ErrorKind::IllConditionedFit, "design condition number " + std::to_string(fit.condition));
  fit.A = (g22 * c1 - g12 * c2) / det;
  fit.B = (g11 * c2 - g12 * c1) / det;
  fit.log_scale = shift;
  double res = 0;
  for (int k = 0; k < samples; ++k) res += std::norm(y[k].shifted(shift) - fit.A * b1[k] - fit.B * b2[k]);
  fit.residual = std::sqrt(res / ynorm);
  return fit;
}

RadialSolution normalize_outgoing(const RadialSolution& u1, const LGFrame& frame) {
  const double r = u1.r_hi();
  const double q = frame.E() - frame.vm_prime()(r);
  if (!(q > 0)) throw Error(ErrorKind::NotAllowedAtStart, "outer end of u1 is not allowed");
  const LogComplex target{-0.25 * std::log(q), LogComplex::wrap(frame.phase_integral(r) / frame.h())};
  return u1.scaled(target / u1.values.back());
}

ConnectionFit normalize_real_fit(const ConnectionFit& fit) {
  const double a = fit.A.real(), b = fit.B.real();
  const double n = std::hypot(a, b);
  if (n == 0.0) throw Error(ErrorKind::IllConditionedFit, "zero coefficient vector");
  ConnectionFit out = fit;
  const double s = a >= 0 ? 1.0 : -1.0;
  out.A = s * a / n;
  out.B = s * b / n;
  out.log_scale = 0.0;
  return out;
}

}  // namespace rlab
