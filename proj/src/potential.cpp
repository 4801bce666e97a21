#include "rlab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "rlab/errors.hpp"
#include "rlab/numerics.hpp"

namespace rlab {

namespace {

// Richardson-extrapolated central difference of f at r.
double richardson_derivative(const RadialPotential::Fn& f, double r, double step) {
  const auto central = [&](double d) { return (f(r + d) - f(r - d)) / (2.0 * d); };
  return (4.0 * central(step / 2.0) - central(step)) / 3.0;
}

}  // namespace

RadialPotential::RadialPotential(std::string name, Fn value, std::array<Fn, 3> derivatives,
                                 std::optional<double> support_radius, double lower_bound,
                                 bool validate_derivatives, std::vector<double> kinks)
    : name_(std::move(name)),
      value_(std::move(value)),
      derivs_(std::move(derivatives)),
      support_(support_radius),
      lower_bound_(lower_bound),
      kinks_(std::move(kinks)) {
  if (!value_ || !derivs_[0] || !derivs_[1] || !derivs_[2])
    throw Error(ErrorKind::InvalidArgument, "potential '" + name_ + "' is missing a closure");
  if (support_) kinks_.push_back(*support_);
  if (validate_derivatives) {
    derivative_mismatch_ = check_derivatives();
    if (derivative_mismatch_ > 1e-6)
      throw Error(ErrorKind::InvalidArgument,
                  "potential '" + name_ + "': supplied derivatives disagree with finite "
                  "differences (relative mismatch " + std::to_string(derivative_mismatch_) + ")");
  }
}

double RadialPotential::deriv(double r, int k) const {
  switch (k) {
    case 0:
      return value_(r);
    case 1:
    case 2:
    case 3:
      return derivs_[k - 1](r);
    default:
      throw Error(ErrorKind::InvalidArgument, "derivative order must be 0..3");
  }
}

double RadialPotential::check_derivatives() const {
  const double range = support_ && *support_ > 0 ? *support_ : 10.0;
  constexpr int kSamples = 100;
  const std::array<const Fn*, 4> chain{&value_, &derivs_[0], &derivs_[1], &derivs_[2]};

  double worst = 0.0;
  for (int k = 1; k <= 3; ++k) {
    std::vector<double> exact(kSamples), approx(kSamples);
    std::vector<bool> used(kSamples, false);
    double scale = 0.0;
    for (int i = 0; i < kSamples; ++i) {
      const double r = range * (0.02 + 0.98 * (i + 0.5) / kSamples);
      const double step = 1e-3 * std::max(r, 1e-2);
      const bool near_kink = std::any_of(kinks_.begin(), kinks_.end(),
                                         [&](double b) { return std::abs(r - b) < 4.0 * step; });
      if (near_kink) continue;
      used[i] = true;
      exact[i] = (*chain[k])(r);
      approx[i] = richardson_derivative(*chain[k - 1], r, step);
      scale = std::max(scale, std::abs(exact[i]));
    }
    for (int i = 0; i < kSamples; ++i) {
      if (!used[i]) continue;
      const double denom = std::max({std::abs(exact[i]), 1e-3 * scale, 1e-300});
      worst = std::max(worst, std::abs(exact[i] - approx[i]) / denom);
    }
  }
  return worst;
}

std::array<double, 4> RadialPotential::regularity_bounds(std::size_t samples) const {
  std::array<double, 4> bounds{};
  const double lo = std::log(1e-6), hi = std::log(1e6);
  for (std::size_t i = 0; i < samples; ++i) {
    const double r = std::exp(lo + (hi - lo) * static_cast<double>(i) / (samples - 1));
    for (int k = 0; k <= 3; ++k)
      bounds[k] = std::max(bounds[k], std::pow(r, 2 + k) * std::abs(deriv(r, k)));
  }
  return bounds;
}

RadialPotential zero_potential() {
  const auto zero = [](double) { return 0.0; };
  return RadialPotential("zero", zero, {zero, zero, zero}, 1.0, 0.0, false);
}

RadialPotential bump_quartic(double amplitude, double rho) {
  if (rho <= 0) throw Error(ErrorKind::InvalidArgument, "bump support radius must be positive");
  const double A = amplitude;
  const double rho2 = rho * rho;
  auto s_of = [rho2](double r) { return 1.0 - r * r / rho2; };
  auto value = [=](double r) {
    if (r >= rho) return 0.0;
    const double s = s_of(r);
    return -A * s * s * s * s;
  };
  auto d1 = [=](double r) {
    if (r >= rho) return 0.0;
    const double s = s_of(r);
    return 8.0 * A * r * s * s * s / rho2;
  };
  auto d2 = [=](double r) {
    if (r >= rho) return 0.0;
    const double s = s_of(r);
    const double x2 = r * r / rho2;
    return 8.0 * A / rho2 * s * s * (s - 6.0 * x2);
  };
  auto d3 = [=](double r) {
    if (r >= rho) return 0.0;
    const double s = s_of(r);
    const double x2 = r * r / rho2;
    return 48.0 * A * r * s / (rho2 * rho2) * (4.0 * x2 - 3.0 * s);
  };
  return RadialPotential("bump_quartic", value, {d1, d2, d3}, rho, std::min(0.0, -A));
}

RadialPotential parabola(double alpha, double center, double offset) {
  const double a2 = alpha * alpha;
  return RadialPotential(
      "parabola", [=](double r) { return a2 * (r - center) * (r - center) + offset; },
      {[=](double r) { return 2.0 * a2 * (r - center); }, [=](double) { return 2.0 * a2; },
       [](double) { return 0.0; }},
      std::nullopt, offset);
}

RadialPotential piecewise_polynomial(std::vector<double> breaks,
                                     std::vector<std::vector<double>> coeffs) {
  if (breaks.size() < 2 || coeffs.size() != breaks.size() - 1)
    throw Error(ErrorKind::InvalidArgument,
                "piecewise polynomial needs n+1 breakpoints for n coefficient lists");
  if (!std::is_sorted(breaks.begin(), breaks.end()) ||
      std::adjacent_find(breaks.begin(), breaks.end()) != breaks.end())
    throw Error(ErrorKind::InvalidArgument, "breakpoints must be strictly increasing");

  struct Table {
    std::vector<double> b;
    std::vector<std::vector<double>> c;
    double eval(double r, int k) const {
      if (r >= b.back()) return 0.0;
      const auto it = std::upper_bound(b.begin(), b.end(), r);
      const std::size_t piece = it == b.begin() ? 0 : static_cast<std::size_t>(it - b.begin()) - 1;
      const auto& cs = c[piece];
      const double x = r - b[piece];
      double acc = 0.0;
      for (std::size_t j = cs.size(); j-- > static_cast<std::size_t>(k);) {
        double falling = 1.0;
        for (int q = 0; q < k; ++q) falling *= static_cast<double>(j - q);
        acc = acc * x + falling * cs[j];
      }
      return acc;
    }
  };
  // Horner above accumulates sum_j falling(j,k) c_j x^{j-k}.
  auto table = std::make_shared<Table>(Table{breaks, std::move(coeffs)});
  double lower = 0.0;
  const double last = breaks.back();
  for (int i = 0; i <= 2000; ++i) lower = std::min(lower, table->eval(last * i / 2000.0, 0));
  std::vector<double> interior(breaks.begin() + 1, breaks.end() - 1);
  return RadialPotential(
      "piecewise_poly", [table](double r) { return table->eval(r, 0); },
      {[table](double r) { return table->eval(r, 1); },
       [table](double r) { return table->eval(r, 2); },
       [table](double r) { return table->eval(r, 3); }},
      last, lower, true, std::move(interior));
}

double EffectivePotential::deriv(double r, int k) const {
  const double r2 = r * r;
  switch (k) {
    case 0:
      return eval(r);
    case 1:
      return base_.deriv(r, 1) - 2.0 * m_ / (r2 * r);
    case 2:
      return base_.deriv(r, 2) + 6.0 * m_ / (r2 * r2);
    case 3:
      return base_.deriv(r, 3) - 24.0 * m_ / (r2 * r2 * r);
    default:
      throw Error(ErrorKind::InvalidArgument, "derivative order must be 0..3");
  }
}

// ---------------------------------------------------------------------------
// Thresholds

double compute_phi(const RadialPotential& V0, double E0, double r) {
  return r * r * (E0 - V0.eval(r));
}

double compute_phi_prime(const RadialPotential& V0, double E0, double r) {
  return 2.0 * r * (E0 - V0.eval(r)) - r * r * V0.deriv(r, 1);
}

ThresholdData compute_thresholds(const RadialPotential& V0, double E0,
                                 const ThresholdOptions& options) {
  if (!(E0 > 0)) throw Error(ErrorKind::InvalidArgument, "E0 must be positive");
  const auto support = V0.support_radius();
  const double extent = support ? *support : options.scan_radius;
  if (!(extent > 0)) throw Error(ErrorKind::NoTrapping, "empty threshold scan domain");

  const std::size_t n = std::max<std::size_t>(options.grid_points, 16);
  std::vector<double> grid(n), phi(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = extent * static_cast<double>(i + 1) / static_cast<double>(n);
    phi[i] = compute_phi(V0, E0, grid[i]);
  }

  const auto phi_fn = [&](double r) { return compute_phi(V0, E0, r); };
  double M0 = -std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, double>> maxima;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (phi[i] >= phi[i - 1] && phi[i] > phi[i + 1]) {
      const auto [x, v] =
          numerics::golden_section_max(phi_fn, grid[i - 1], grid[i + 1], options.bracket_width);
      if (v >= phi[i])
        maxima.emplace_back(x, v);
      else
        maxima.emplace_back(grid[i], phi[i]);
      M0 = std::max(M0, maxima.back().second);
    }
  }
  if (maxima.empty())
    throw Error(ErrorKind::NoTrapping,
                "Phi has no interior maximum: V_m^{-1}(E0) never has two points");

  const double tie = 1e-12 * std::max(1.0, std::abs(M0));
  double r1 = 0.0;
  for (const auto& [x, v] : maxima)
    if (v >= M0 - tie) r1 = std::max(r1, x);

  // First return of Phi to M0 after the dip that follows r1.
  std::size_t j = static_cast<std::size_t>(std::upper_bound(grid.begin(), grid.end(), r1) - grid.begin());
  while (j < n && phi[j] >= M0 - tie) ++j;
  while (j < n && phi[j] < M0) ++j;
  double lo, hi;
  if (j < n) {
    lo = grid[j - 1];
    hi = grid[j];
  } else {
    lo = extent;
    hi = 2.0 * extent;
    int guard = 0;
    while (phi_fn(hi) < M0) {
      lo = hi;
      hi *= 2.0;
      if (++guard > 200) throw Error(ErrorKind::AssumptionViolated, "Phi never returns to M0");
    }
  }
  ThresholdData out;
  out.E0 = E0;
  out.M0 = M0;
  out.r1 = r1;
  out.r2_bisection =
      numerics::bisect([&](double r) { return phi_fn(r) - M0; }, lo, hi, options.root_tol);
  out.r2_closed_form = std::numeric_limits<double>::quiet_NaN();
  const double closed = std::sqrt(M0 / E0);
  if (support && closed >= *support) {
    out.r2_closed_form = closed;
    out.r2 = closed;
    out.closed_form_used = true;
  } else {
    out.r2 = out.r2_bisection;
  }
  if (!(out.r1 < out.r2))
    throw Error(ErrorKind::AssumptionViolated, "thresholds violate r1 < r2");

  out.assumption_flags.M0_finite = std::isfinite(M0);
  bool monotone = true;
  for (int i = 0; i <= 1000; ++i) {
    const double r = out.r2 * (1.0 + 9.0 * i / 1000.0);
    if (!(compute_phi_prime(V0, E0, r) > 0)) {
      monotone = false;
      break;
    }
  }
  out.assumption_flags.monotone_tail = monotone;
  if (!monotone)
    throw Error(ErrorKind::AssumptionViolated, "V'_{M0} is not negative beyond r2");

  const std::size_t stride = std::max<std::size_t>(1, n / 1000);
  for (std::size_t i = 0; i < n; i += stride) out.phi_profile.emplace_back(grid[i], phi[i]);
  for (int i = 1; i <= 200; ++i) {
    const double r = extent + (2.0 * out.r2 - extent) * i / 200.0;
    if (r > extent) out.phi_profile.emplace_back(r, phi_fn(r));
  }
  return out;
}

PhiQuartet check_phi_quartet(const RadialPotential& V0, const ThresholdData& t,
                             std::size_t samples, double root_tol) {
  PhiQuartet q;
  q.tail_increasing = true;
  for (std::size_t i = 0; i <= samples / 10; ++i) {
    const double r = t.r2 * (1.0 + 9.0 * static_cast<double>(i) / (samples / 10));
    if (!(compute_phi_prime(V0, t.E0, r) > 0)) {
      q.tail_increasing = false;
      break;
    }
  }
  const double scale = std::max(1.0, std::abs(t.M0));
  q.endpoint_error = std::max(std::abs(compute_phi(V0, t.E0, t.r1) - t.M0),
                              std::abs(compute_phi(V0, t.E0, t.r2) - t.M0));
  q.endpoints_match = q.endpoint_error <= 10.0 * root_tol * scale;

  const double eps = 1e-3 * (t.r2 - t.r1);
  q.interior_below = true;
  q.below_up_to_r2 = true;
  for (std::size_t i = 1; i <= samples; ++i) {
    const double r = t.r2 * static_cast<double>(i) / static_cast<double>(samples);
    const double v = compute_phi(V0, t.E0, r);
    if (v > t.M0 + 1e-12 * scale) q.below_up_to_r2 = false;
    if (r > t.r1 + eps && r < t.r2 - eps && !(v < t.M0)) q.interior_below = false;
  }
  return q;
}

// ---------------------------------------------------------------------------
// Turning points and actions

TurningPoint turning_point(const EffectivePotential& Vm, double E, double r_lower,
                           double root_tol) {
  if (!(r_lower > 0) || !(Vm(r_lower) > E))
    throw Error(ErrorKind::BracketNotFound, "turning_point: V_m(r_lower) must exceed E");
  double step = 1e-3 * r_lower;
  double lo = r_lower;
  double hi = r_lower + step;
  int guard = 0;
  while (Vm(hi) > E) {
    lo = hi;
    step *= 1.2;
    hi = lo + step;
    if (++guard > 2000) throw Error(ErrorKind::BracketNotFound, "no sign change of V_m - E");
  }
  TurningPoint tp;
  tp.R = numerics::bisect([&](double r) { return Vm(r) - E; }, lo, hi, root_tol);
  const double slope = std::abs(Vm.deriv(tp.R, 1));
  tp.sqrt_m_constant = Vm.m() > 0 ? (tp.R + 1.0 / slope) / std::sqrt(Vm.m())
                                  : std::numeric_limits<double>::infinity();
  return tp;
}

namespace {

enum class SignMode { Forbidden, Any };

double action_impl(const EffectivePotential& Vm, double E, double a, double b, SignMode mode,
                   double rel_tol) {
  if (a == b) return 0.0;
  if (a > b) return -action_impl(Vm, E, b, a, mode, rel_tol);
  const double tol = 1e-9 * std::max(1.0, std::abs(E));
  const auto g = [&](double x) {
    const double d = Vm(x) - E;
    if (mode == SignMode::Forbidden && d < -tol)
      throw Error(ErrorKind::ForbiddenRegionViolated,
                  "V_m - E = " + std::to_string(d) + " at r = " + std::to_string(x));
    return std::sqrt(std::abs(d));
  };
  const double mid = 0.5 * (a + b);
  double total = 0.0;
  // left half: square-root endpoint at a, logarithmic stretch when a << mid
  if (a > 0 && mid > 8.0 * a) {
    total += numerics::integrate([&](double t) { return 2.0 * t * g(a + t * t); }, 0.0,
                                 std::sqrt(a), rel_tol);
    total += numerics::integrate([&](double s) {
      const double x = std::exp(s);
      return x * g(x);
    }, std::log(2.0 * a), std::log(mid), rel_tol);
  } else {
    total += numerics::integrate([&](double t) { return 2.0 * t * g(a + t * t); }, 0.0,
                                 std::sqrt(mid - a), rel_tol);
  }
  total += numerics::integrate([&](double t) { return 2.0 * t * g(b - t * t); }, 0.0,
                               std::sqrt(b - mid), rel_tol);
  return total;
}

}  // namespace

double agmon_distance(const EffectivePotential& Vm, double E, double r, double R,
                      double rel_tol) {
  if (r > R) throw Error(ErrorKind::InvalidArgument, "agmon_distance needs r <= R");
  return action_impl(Vm, E, r, R, SignMode::Forbidden, rel_tol);
}

double action_integral(const EffectivePotential& Vm, double E, double a, double b,
                       double rel_tol) {
  return action_impl(Vm, E, a, b, SignMode::Any, rel_tol);
}

}  // namespace rlab
