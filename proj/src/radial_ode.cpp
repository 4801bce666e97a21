#include "rlab/radial_ode.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>

#include "rlab/errors.hpp"
#include "rlab/numerics.hpp"

namespace rlab {

namespace {

using cplx = std::complex<double>;

struct State {
  cplx u, p;  // p = h u'
};

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

class Stepper {
 public:
  Stepper(const EffectivePotential& vm, double h, double E, const IntegrationOptions& opt)
      : vm_(vm), h_(h), E_(E), opt_(opt), max_step_(std::pow(h, 2.0 / 3.0)) {}

  // Integrates (r, y, offset) to `target`, landing on it exactly. `visit` is
  // called after every accepted step.
  template <class Visit>
  void advance(double& r, State& y, double& offset, double target, Visit&& visit) {
    const double dir = target > r ? 1.0 : -1.0;
    while (r != target) {
      const double remaining = std::abs(target - r);
      double H = std::min({step_, max_step_, remaining});
      bool landing = H >= remaining * (1.0 - 1e-12);
      if (remaining - H < 1e-9 * H) {
        H = remaining;
        landing = true;
      }
      const double err = trial(r, dir * H, y);
      if (++steps_ > opt_.max_steps)
        throw Error(ErrorKind::StepFailure, "step budget exhausted near r = " + std::to_string(r));
      const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      if (err <= 1.0) {
        r = landing ? target : r + dir * H;
        y = trial_state_;
        // first-same-as-last: k7 is the derivative at the new point
        k1_ = k7_;
        k1_r_ = r;
        renormalize(y, offset);
        step_ = landing ? std::max(step_, H * fac) : H * fac;
        visit(r, y, offset);
      } else {
        step_ = H * fac;
        if (step_ < 1e-15 * std::max(1.0, std::abs(r)))
          throw Error(ErrorKind::StepFailure,
                      "step size underflow at r = " + std::to_string(r) + " (h = " +
                          std::to_string(h_) + ")");
      }
    }
  }

  void set_initial_step(double s) {
    step_ = s;
    k1_r_ = std::numeric_limits<double>::quiet_NaN();
  }

 private:
  State rhs(double r, const State& y) const {
    const double q = vm_(r) - E_;
    return {y.p / h_, q * y.u / h_};
  }

  double trial(double r, double H, const State& y) {
    const auto comb = [&](std::initializer_list<std::pair<double, const State*>> terms) {
      State s = y;
      for (const auto& [a, k] : terms) {
        s.u += H * a * k->u;
        s.p += H * a * k->p;
      }
      return s;
    };
    if (k1_r_ != r) {
      k1_ = rhs(r, y);
      k1_r_ = r;
    }
    const State k2 = rhs(r + c2 * H, comb({{a21, &k1_}}));
    const State k3 = rhs(r + c3 * H, comb({{a31, &k1_}, {a32, &k2}}));
    const State k4 = rhs(r + c4 * H, comb({{a41, &k1_}, {a42, &k2}, {a43, &k3}}));
    const State k5 = rhs(r + c5 * H, comb({{a51, &k1_}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const State k6 =
        rhs(r + H, comb({{a61, &k1_}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    trial_state_ = comb({{b1, &k1_}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    k7_ = rhs(r + H, trial_state_);
    const cplx eu = H * (e1 * k1_.u + e3 * k3.u + e4 * k4.u + e5 * k5.u + e6 * k6.u + e7 * k7_.u);
    const cplx ep = H * (e1 * k1_.p + e3 * k3.p + e4 * k4.p + e5 * k5.p + e6 * k6.p + e7 * k7_.p);
    const double scale = std::max({std::abs(y.u), std::abs(y.p), std::abs(trial_state_.u),
                                   std::abs(trial_state_.p)});
    const double err = std::max(std::abs(eu), std::abs(ep)) / (opt_.rtol * scale);
    return std::isfinite(err) ? err : 1e10;
  }

  void renormalize(State& y, double& offset) {
    const double s = std::max(std::abs(y.u), std::abs(y.p));
    if (s == 0.0) return;
    const double l = std::log(s);
    if (std::abs(l) > opt_.renorm_threshold) {
      y.u /= s;
      y.p /= s;
      k1_.u /= s;  // the system is linear, so the cached slope rescales too
      k1_.p /= s;
      offset += l;
    }
  }

  const EffectivePotential& vm_;
  double h_, E_;
  IntegrationOptions opt_;
  double max_step_;
  double step_ = 1e-6;
  std::size_t steps_ = 0;
  State k1_{}, k7_{}, trial_state_{};
  double k1_r_ = std::numeric_limits<double>::quiet_NaN();
};

void check_common(double m, double h) {
  if (!(h > 0)) throw Error(ErrorKind::InvalidArgument, "h must be positive");
  if (m < -h * h / 4.0) throw Error(ErrorKind::InvalidArgument, "m must be >= -h^2/4");
}

std::vector<double> sorted_nodes(std::vector<double> nodes) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

// Integrate over `targets` (in travel order), recording every accepted step.
void sweep(Stepper& stepper, double r, State y, double offset, const std::vector<double>& targets,
           RadialSolution& out) {
  const auto record = [&](double rr, const State& s, double off) {
    out.grid.push_back(rr);
    out.values.push_back(LogComplex::from(s.u, off));
    out.dvalues.push_back(LogComplex::from(s.p, off));
  };
  record(r, y, offset);
  for (double t : targets) stepper.advance(r, y, offset, t, record);
}

}  // namespace

double regular_start_radius(const EffectivePotential& Vm, double E) {
  constexpr double floor = 1e-6;
  if (Vm.m() <= 0.0 || Vm(floor) <= E) return floor;
  double prev = floor;
  for (double r = floor * 1.05; r < 1e6; r *= 1.05) {
    if (Vm(r) < E) {
      const double inner = numerics::bisect([&](double x) { return Vm(x) - E; }, prev, r, 1e-12 * r);
      return std::max(floor, inner / 10.0);
    }
    prev = r;
  }
  return floor;
}

double outgoing_start_radius(const EffectivePotential& Vm, double h, double E, double r_min_target,
                             const IntegrationOptions& options) {
  double r = std::max({options.outgoing_start_min, r_min_target, 1.0});
  const auto support = Vm.base().support_radius();
  for (int k = 0; k < 60; ++k, r *= 2.0) {
    if (support && r < *support) continue;
    const double q = E - Vm(r);
    if (!(q > 0)) continue;
    const double dq = -Vm.deriv(r, 1);
    if (h * std::abs(dq) / std::pow(q, 1.5) <= options.lg_epsilon) return r;
  }
  throw Error(ErrorKind::NotAllowedAtStart,
              "no radius with E > V_m and Liouville-Green accuracy " +
                  std::to_string(options.lg_epsilon) + " found (E = " + std::to_string(E) + ")");
}

RadialSolution integrate_regular(const RadialPotential& V0, double m, double h, double E,
                                 double r_max, const std::vector<double>& nodes,
                                 const IntegrationOptions& options) {
  check_common(m, h);
  auto vm = std::make_shared<const EffectivePotential>(V0, m);
  const auto sorted = sorted_nodes(nodes);
  double r_min = regular_start_radius(*vm, E);
  if (!sorted.empty()) r_min = std::min(r_min, 0.5 * sorted.front());
  const double alpha = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * m / (h * h)));
  // keep the first Frobenius correction small so the start is on the regular branch
  while (r_min > 1e-6 && std::abs(V0(r_min) - E) * r_min * r_min / (h * h * (4.0 * alpha + 2.0)) > 1e-3)
    r_min *= 0.5;
  if (!(r_max > r_min)) throw Error(ErrorKind::InvalidArgument, "r_max must exceed the start radius");

  const double c = (V0(r_min) - E) / (h * h * (4.0 * alpha + 2.0));
  const double poly = 1.0 + c * r_min * r_min;
  const double offset = alpha * std::log(r_min) + std::log(std::abs(poly));
  const double sgn = poly > 0 ? 1.0 : -1.0;
  State y{sgn, sgn * h * (alpha / r_min + 2.0 * c * r_min / poly)};

  RadialSolution out(vm, options);
  out.boundary_kind = BoundaryKind::RegularAtZero;
  out.params = {m, h, E, V0.name()};
  std::vector<double> targets;
  for (double t : sorted)
    if (t > r_min && t < r_max) targets.push_back(t);
  targets.push_back(r_max);

  Stepper stepper(*vm, h, E, options);
  stepper.set_initial_step(1e-3 * std::min(r_min, h / std::sqrt(std::abs(V0(r_min) - E) + m / (r_min * r_min) + 1.0)));
  sweep(stepper, r_min, y, offset, targets, out);
  return out;
}

RadialSolution integrate_outgoing(const RadialPotential& V0, double m, double h, double E,
                                  double r_min_target, const std::vector<double>& nodes,
                                  const IntegrationOptions& options) {
  check_common(m, h);
  if (!(E > 0)) throw Error(ErrorKind::NotAllowedAtStart, "outgoing solution needs E > 0");
  if (!(r_min_target > 0)) throw Error(ErrorKind::InvalidArgument, "r_min_target must be positive");
  auto vm = std::make_shared<const EffectivePotential>(V0, m);
  const auto sorted = sorted_nodes(nodes);
  IntegrationOptions opt = options;
  if (!sorted.empty()) opt.outgoing_start_min = std::max(opt.outgoing_start_min, sorted.back());
  const double r0 = outgoing_start_radius(*vm, h, E, r_min_target, opt);

  // Liouville-Green data: h u' = y u with y = i p + h y1 + h^2 y2, p = sqrt(E - V_m).
  const double q = E - (*vm)(r0);
  const double dq = -vm->deriv(r0, 1);
  const double ddq = -vm->deriv(r0, 2);
  const double p = std::sqrt(q);
  const double dp = dq / (2.0 * p);
  const double ddp = (ddq - 2.0 * dp * dp) / (2.0 * p);
  const double y1 = -dp / (2.0 * p);
  const double dy1 = -(ddp * p - dp * dp) / (2.0 * p * p);
  const cplx y2 = cplx(0.0, 1.0) * (dy1 + y1 * y1) / (2.0 * p);
  const cplx ylg = cplx(0.0, p) + h * y1 + h * h * y2;
  const double phase0 = std::fmod(std::sqrt(E) * r0 / h, 2.0 * std::numbers::pi);
  const cplx u = std::polar(1.0, phase0);
  State y{u, ylg * u};

  RadialSolution out(vm, opt);
  out.boundary_kind = BoundaryKind::Outgoing;
  out.params = {m, h, E, V0.name()};
  std::vector<double> targets;
  for (auto it = sorted.rbegin(); it != sorted.rend(); ++it)
    if (*it < r0 && *it > r_min_target) targets.push_back(*it);
  targets.push_back(r_min_target);

  Stepper stepper(*vm, h, E, opt);
  stepper.set_initial_step(1e-2 * h / std::sqrt(E));
  sweep(stepper, r0, y, 0.0, targets, out);
  std::reverse(out.grid.begin(), out.grid.end());
  std::reverse(out.values.begin(), out.values.end());
  std::reverse(out.dvalues.begin(), out.dvalues.end());
  return out;
}

RadialSolution integrate_dirichlet(const RadialPotential& V0, double m, double h, double E,
                                   double r_dirichlet, double r_lo, double r_hi,
                                   const std::vector<double>& nodes, const IntegrationOptions& options) {
  check_common(m, h);
  if (!(r_lo > 0 && r_lo < r_dirichlet && r_dirichlet < r_hi))
    throw Error(ErrorKind::InvalidArgument, "need 0 < r_lo < r_dirichlet < r_hi");
  auto vm = std::make_shared<const EffectivePotential>(V0, m);
  const auto sorted = sorted_nodes(nodes);
  const double step0 = 1e-3 * h / std::sqrt(std::abs(E - (*vm)(r_dirichlet)) + 1.0);

  RadialSolution inward(vm, options);
  std::vector<double> targets;
  for (auto it = sorted.rbegin(); it != sorted.rend(); ++it)
    if (*it < r_dirichlet && *it > r_lo) targets.push_back(*it);
  targets.push_back(r_lo);
  Stepper in_stepper(*vm, h, E, options);
  in_stepper.set_initial_step(step0);
  sweep(in_stepper, r_dirichlet, State{0.0, 1.0}, 0.0, targets, inward);

  RadialSolution out(vm, options);
  out.boundary_kind = BoundaryKind::DirichletEigenfunction;
  out.params = {m, h, E, V0.name()};
  targets.clear();
  for (double t : sorted)
    if (t > r_dirichlet && t < r_hi) targets.push_back(t);
  targets.push_back(r_hi);
  Stepper out_stepper(*vm, h, E, options);
  out_stepper.set_initial_step(step0);
  sweep(out_stepper, r_dirichlet, State{0.0, 1.0}, 0.0, targets, out);

  // prepend the inward sweep (its first entry duplicates r_dirichlet)
  out.grid.insert(out.grid.begin(), inward.grid.rbegin(), inward.grid.rend() - 1);
  out.values.insert(out.values.begin(), inward.values.rbegin(), inward.values.rend() - 1);
  out.dvalues.insert(out.dvalues.begin(), inward.dvalues.rbegin(), inward.dvalues.rend() - 1);
  return out;
}

std::pair<LogComplex, LogComplex> RadialSolution::state_at(double r) const {
  if (grid.empty() || r < grid.front() || r > grid.back())
    throw Error(ErrorKind::OutOfGrid, "r = " + std::to_string(r) + " outside [" +
                                          std::to_string(grid.empty() ? 0.0 : grid.front()) +
                                          ", " + std::to_string(grid.empty() ? 0.0 : grid.back()) +
                                          "]");
  const auto it = std::lower_bound(grid.begin(), grid.end(), r);
  std::size_t i = static_cast<std::size_t>(it - grid.begin());
  if (i < grid.size() && grid[i] == r) return {values[i], dvalues[i]};
  if (i > 0 && (i == grid.size() || r - grid[i - 1] < grid[i] - r)) --i;
  if (!ode_) throw Error(ErrorKind::OutOfGrid, "solution has no ODE attached for off-grid query");

  const double shift = std::max(values[i].log_mag, dvalues[i].log_mag);
  State y{values[i].shifted(shift), dvalues[i].shifted(shift)};
  double offset = shift;
  double x = grid[i];
  Stepper stepper(*ode_, params.h, params.E, options_);
  stepper.set_initial_step(std::abs(r - x));
  stepper.advance(x, y, offset, r, [](double, const State&, double) {});
  return {LogComplex::from(y.u, offset), LogComplex::from(y.p, offset)};
}

RadialSolution RadialSolution::scaled(LogComplex factor) const {
  RadialSolution out = *this;
  for (auto& v : out.values) v = v * factor;
  for (auto& v : out.dvalues) v = v * factor;
  return out;
}

namespace {

LogComplex difference(LogComplex a, LogComplex b) {
  const double shift = std::max(a.log_mag, b.log_mag);
  if (std::isinf(shift)) return {};
  return LogComplex::from(a.shifted(shift) - b.shifted(shift), shift);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

WronskianResult wronskian(const RadialSolution& u0, const RadialSolution& u1, double r_from) {
  const auto& a = u0.params;
  const auto& b = u1.params;
  const auto close = [](double x, double y) { return std::abs(x - y) <= 1e-14 * std::max(1.0, std::abs(x)); };
  if (!close(a.m, b.m) || !close(a.h, b.h) || !close(a.E, b.E))
    throw Error(ErrorKind::InconsistentParams, "solutions were built with different (m, h, E)");

  std::vector<LogComplex> ws;
  std::size_t j = 0;
  for (std::size_t i = 0; i < u0.grid.size(); ++i) {
    while (j < u1.grid.size() && u1.grid[j] < u0.grid[i]) ++j;
    if (j < u1.grid.size() && u1.grid[j] == u0.grid[i] && u0.grid[i] >= r_from) {
      const LogComplex w = difference(u0.values[i] * u1.dvalues[j], u0.dvalues[i] * u1.values[j]);
      ws.push_back(w.scaled(-std::log(a.h)));
    }
  }
  if (ws.size() < 10)
    throw Error(ErrorKind::InvalidArgument,
                "Wronskian needs >= 10 shared nodes, found " + std::to_string(ws.size()));
  std::vector<double> logs, phases;
  for (const auto& w : ws) {
    logs.push_back(w.log_mag);
    phases.push_back(LogComplex::wrap(w.phase - ws.front().phase));
  }
  WronskianResult out;
  out.value = {median(logs), LogComplex::wrap(ws.front().phase + median(phases))};
  out.nodes_used = ws.size();
  for (const auto& w : ws)
    out.max_relative_deviation = std::max(out.max_relative_deviation, relative_difference(w, out.value));
  return out;
}

KernelValue kernel(const RadialSolution& u0, const RadialSolution& u1, const LogComplex& W, double r,
                   double rp) {
  const double lo = std::min(r, rp);
  const double hi = std::max(r, rp);
  KernelValue k;
  k.r = r;
  k.rp = rp;
  k.params = u0.params;
  k.wronskian = W;
  const double h = u0.params.h;
  k.value = (u0.value_at(lo) * u1.value_at(hi) / W).scaled(-2.0 * std::log(h)).negated();
  return k;
}

ResolventKernel::ResolventKernel(const RadialPotential& V0, double m, double h, double E,
                                 std::vector<double> nodes, const IntegrationOptions& options) {
  nodes = sorted_nodes(std::move(nodes));
  if (nodes.empty() || !(nodes.front() > 0))
    throw Error(ErrorKind::InvalidArgument, "kernel nodes must be positive and nonempty");
  if (nodes.size() < 12) {
    double lo = nodes.front(), hi = nodes.back();
    if (hi - lo < 1e-3 * hi) {
      lo *= 0.9;
      hi *= 1.1;
    }
    for (int i = 0; i <= 12; ++i) nodes.push_back(lo + (hi - lo) * i / 12.0);
    nodes = sorted_nodes(std::move(nodes));
  }
  u0_ = integrate_regular(V0, m, h, E, nodes.back(), nodes, options);
  u1_ = integrate_outgoing(V0, m, h, E, nodes.front(), nodes, options);
  w_ = rlab::wronskian(u0_, u1_);
}

ResolventKernel::ResolventKernel(RadialSolution u0, const RadialPotential& V0,
                                 std::vector<double> nodes, const IntegrationOptions& options,
                                 double wronskian_from)
    : u0_(std::move(u0)) {
  nodes = sorted_nodes(std::move(nodes));
  if (nodes.empty() || !(nodes.front() > 0))
    throw Error(ErrorKind::InvalidArgument, "kernel nodes must be positive and nonempty");
  const auto& p = u0_.params;
  u1_ = integrate_outgoing(V0, p.m, p.h, p.E, nodes.front(), nodes, options);
  w_ = rlab::wronskian(u0_, u1_, wronskian_from);
}

KernelValue ResolventKernel::outgoing(double r, double rp) const {
  return kernel(u0_, u1_, w_.value, r, rp);
}

KernelValue ResolventKernel::incoming(double r, double rp) const {
  KernelValue k = outgoing(r, rp);
  k.value = k.value.conj();
  k.wronskian = k.wronskian.conj();
  return k;
}

void write_solution_csv(const RadialSolution& u, std::ostream& out) {
  out << "r,log_abs_u,phase_u,log_abs_hdu,phase_hdu\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < u.grid.size(); ++i)
    out << u.grid[i] << ',' << u.values[i].log_mag << ',' << u.values[i].phase << ','
        << u.dvalues[i].log_mag << ',' << u.dvalues[i].phase << '\n';
}

}  // namespace rlab
