#include "rlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "rlab/errors.hpp"
#include "rlab/numerics.hpp"

namespace rlab {

namespace {

int sign_of(const LogComplex& z) { return std::cos(z.phase) >= 0.0 ? 1 : -1; }

struct Shot {
  int nodes = 0;
  /// u(r2) / max|u|, sign taken relative to u near the origin.
  double g = 0.0;
  bool below() const { return nodes == 0 && g > 0.0; }
};

Shot shoot(const RadialSolution& u) {
  Shot s;
  s.nodes = count_nodes(u);
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& v : u.values) top = std::max(top, v.log_mag);
  const auto& end = u.values.back();
  s.g = sign_of(end) * sign_of(u.values.front()) * std::exp(end.log_mag - top);
  return s;
}

struct SearchResult {
  double p = 0.0;
  Shot shot;  // last shot below the ground state
  double width = 0.0;  // final bracket
};

// Ground-state parameter p in [lo, hi], where shots below the ground state
// have no interior zero and u(r2) of the starting sign. Bisection until the
// bracket is narrower than switch_width, then Illinois regula falsi on g.
SearchResult ground_state_search(const std::function<Shot(double)>& at, double lo, double hi,
                                 double switch_width, double tol) {
  Shot slo = at(lo);
  Shot shi = at(hi);
  if (slo.nodes > 0)
    throw Error(ErrorKind::NotGroundState,
                "lower end of the window already has " + std::to_string(slo.nodes) + " nodes");
  if (!slo.below() || shi.below())
    throw Error(ErrorKind::NoSignChange, "window does not contain the ground state");
  while (hi - lo > switch_width) {
    const double mid = 0.5 * (lo + hi);
    const Shot s = at(mid);
    if (s.below()) {
      lo = mid;
      slo = s;
    } else {
      hi = mid;
      shi = s;
    }
  }
  // the ground-state crossing is a simple root of g; above it g < 0 until the
  // next zero enters, far outside this bracket
  int side = 0;
  for (int it = 0; it < 100 && hi - lo > tol; ++it) {
    const double p = (lo * shi.g - hi * slo.g) / (shi.g - slo.g);
    const Shot s = at(p);
    if (s.g == 0.0) return {p, s, 0.0};
    if (s.below()) {
      lo = p;
      slo = s;
      if (side == -1) shi.g *= 0.5;
      side = -1;
    } else {
      hi = p;
      shi = s;
      if (side == 1) slo.g *= 0.5;
      side = 1;
    }
  }
  // the lower shot certifies the node count; the energy is the better end
  const bool pick_lo = std::abs(slo.g) <= std::abs(shi.g);
  return {pick_lo ? lo : hi, slo, hi - lo};
}

}  // namespace

int count_nodes(const RadialSolution& u) {
  int n = 0;
  for (std::size_t i = 1; i < u.values.size(); ++i)
    if (!u.values[i].is_zero() && !u.values[i - 1].is_zero() &&
        sign_of(u.values[i]) != sign_of(u.values[i - 1]))
      ++n;
  return n;
}

EigenResult dirichlet_ground_energy(const RadialPotential& V0, double m, double h, double E_lo,
                                    double E_hi, double r2, const IntegrationOptions& options) {
  if (!(E_hi > E_lo)) throw Error(ErrorKind::InvalidArgument, "empty energy window");
  if (!(r2 > 0)) throw Error(ErrorKind::InvalidArgument, "r2 must be positive");
  const double scale = std::max(std::abs(E_lo), std::abs(E_hi));
  const auto at = [&](double E) { return shoot(integrate_regular(V0, m, h, E, r2, {}, options)); };
  const auto found = ground_state_search(at, E_lo, E_hi, 1e-6 * scale, 1e-12 * scale);
  EigenResult out;
  out.E = found.p;
  out.residual = found.width / scale;
  out.node_count = found.shot.nodes;
  out.h = h;
  out.m = m;
  out.r2 = r2;
  return out;
}

double SmoothBump::operator()(double r) const {
  const double half = 0.5 * half_width;
  return 1.0 - numerics::smooth_step((std::abs(r - center) - half) / half);
}

double SmoothBump::derivative(double r) const {
  const double half = 0.5 * half_width;
  const double s = r >= center ? 1.0 : -1.0;
  return -s * numerics::smooth_step_deriv((std::abs(r - center) - half) / half, 1) / half;
}

QuasimodeParams default_quasimode(const RadialPotential& V0, const ThresholdData& t) {
  const EffectivePotential v(V0, t.M0);
  const double curvature = v.deriv(t.r1, 2);
  if (!(curvature > 0))
    throw Error(ErrorKind::AssumptionViolated, "V_{M0} is not convex at r1");
  QuasimodeParams q;
  q.alpha = std::sqrt(0.5 * curvature);
  q.r1 = t.r1;
  q.cutoff = {t.r1, 0.5 * std::min(t.r2 - t.r1, t.r1)};
  return q;
}

double rayleigh_quotient_bound(const RadialPotential& V0, double m, double h,
                               const QuasimodeParams& q, double r2) {
  const double c = q.cutoff.center;
  const double w = q.cutoff.half_width;
  if (!(w > 0) || c - w <= 0.0 || c + w >= r2)
    throw Error(ErrorKind::SupportViolated, "cutoff support must lie inside (0, r2)");
  if (!(q.alpha > 0)) throw Error(ErrorKind::InvalidArgument, "alpha must be positive");
  const EffectivePotential v(V0, m);
  const auto gauss = [&](double r) { return std::exp(-q.alpha * (r - q.r1) * (r - q.r1) / (2.0 * h)); };
  const auto wf = [&](double r) { return gauss(r) * q.cutoff(r); };
  const auto dwf = [&](double r) {
    return gauss(r) * (q.cutoff.derivative(r) - q.alpha * (r - q.r1) / h * q.cutoff(r));
  };
  std::vector<double> pts{c - w, c - 0.5 * w, q.r1, c + 0.5 * w, c + w};
  std::sort(pts.begin(), pts.end());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (pts[i + 1] <= pts[i]) continue;
    num += numerics::integrate(
        [&](double r) {
          const double a = wf(r), d = dwf(r);
          return h * h * d * d + v(r) * a * a;
        },
        pts[i], pts[i + 1], 1e-12);
    den += numerics::integrate([&](double r) { const double a = wf(r); return a * a; }, pts[i],
                               pts[i + 1], 1e-12);
  }
  return num / den;
}

std::vector<ResonantMode> resonant_sequence_hj(const RadialPotential& V0, const ThresholdData& t,
                                               int n, int j_first, int j_last,
                                               const IntegrationOptions& options) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "dimension must be >= 2");
  if (j_first < 0 || j_last < j_first) throw Error(ErrorKind::InvalidArgument, "bad j range");
  const double E0 = t.E0;
  double vmax = -std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 10000; ++i) vmax = std::max(vmax, V0(t.r2 * i / 10000.0));
  if (vmax >= E0)
    throw Error(ErrorKind::HypothesisViolated, "max V0 on (0, r2) must stay below E0");

  std::vector<ResonantMode> out;
  for (int j = j_first; j <= j_last; ++j) {
    ResonantMode mode;
    mode.j = j;
    mode.sigma = static_cast<double>(j) * (j + n - 2);
    const double nu = mode.sigma + (n - 1.0) * (n - 3.0) / 4.0;
    mode.self_adjointness_window = 4.0 * mode.sigma + (n - 1.0) * (n - 3.0) <= 3.0;
    if (!(nu > 0)) {
      // no centrifugal barrier: the weighted problem is not of the trapped type
      mode.h = mode.m = std::numeric_limits<double>::quiet_NaN();
      mode.M0_gap = mode.residual = std::numeric_limits<double>::quiet_NaN();
      out.push_back(mode);
      continue;
    }
    // lambda = h^{-2}; at m = M0 (lambda = nu / M0) V_m >= E0 on (0, r2), so
    // the shot is below the ground state.
    const auto at = [&](double lambda) {
      const double h = 1.0 / std::sqrt(lambda);
      return shoot(integrate_regular(V0, nu / lambda, h, E0, t.r2, {}, options));
    };
    const double lo = nu / t.M0;
    double hi = 2.0 * lo;
    for (int k = 0; at(hi).below(); ++k) {
      if (k > 60) throw Error(ErrorKind::BracketNotFound, "no ground state found for j = " + std::to_string(j));
      hi *= 2.0;
    }
    const auto found = ground_state_search(at, lo, hi, 1e-6 * lo, 1e-12 * lo);
    mode.h = 1.0 / std::sqrt(found.p);
    mode.m = nu / found.p;
    mode.M0_gap = t.M0 - mode.m;
    mode.residual = found.width / lo;
    out.push_back(mode);
  }
  return out;
}

}  // namespace rlab
