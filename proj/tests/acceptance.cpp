// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "rlab/airy.hpp"
#include "rlab/asymptotics.hpp"
#include "rlab/errors.hpp"
#include "rlab/modes.hpp"
#include "rlab/numerics.hpp"
#include "rlab/potential.hpp"
#include "rlab/radial_ode.hpp"
#include "rlab/spectral.hpp"
#include "rlab/wave.hpp"

using namespace rlab;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double variation(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi / *lo;
}

// trapped setting shared by the kernel, lower-bound and dichotomy checks
const RadialPotential& trapping_bump() {
  static const RadialPotential V = bump_quartic(1000.0);
  return V;
}
constexpr double kTrapE0 = 100.0;

EigenResult trapped_ground(const ThresholdData& t, double h) {
  const auto& V = trapping_bump();
  const auto q = default_quasimode(V, t);
  const double rq = rayleigh_quotient_bound(V, t.M0, h, q, t.r2);
  return dirichlet_ground_energy(V, t.M0, h, t.E0, t.E0 + 1.5 * (rq - t.E0), t.r2);
}

Outcome threshold_identity() {
  const auto V = bump_quartic(1.0);
  const auto t = compute_thresholds(V, 0.01);
  const double rel = std::abs(t.r2_bisection - std::sqrt(t.M0 / t.E0)) / t.r2_bisection;
  const auto q = check_phi_quartet(V, t, 100000);
  return {rel < 1e-8 && q.all(), fmt("|r2 - sqrt(M0/E0)|/r2 = %.2e (< 1e-8), Phi quartet %s", rel,
                                     q.all() ? "holds" : "fails")};
}

Outcome small_energy_scaling() {
  const auto V = bump_quartic(1.0);
  double limit = 0.0;
  for (int i = 1; i <= 1000000; ++i) {
    const double r = i / 1e6;
    limit = std::max(limit, -r * r * V(r));
  }
  std::vector<double> v;
  for (double E0 : {1e-2, 1e-3, 1e-4}) {
    const auto t = compute_thresholds(V, E0);
    v.push_back(E0 * t.r2 * t.r2);
  }
  const bool monotone = (v[1] - v[0]) * (v[2] - v[1]) > 0;
  const double rel = std::abs(v[2] / limit - 1.0);
  return {monotone && rel < 0.02,
          fmt("E0 r2^2 = %.6f, %.6f, %.6f (%s); limit %.6f, gap %.2e (< 0.02)", v[0], v[1], v[2],
              monotone ? "monotone" : "not monotone", limit, rel)};
}

Outcome airy_suite() {
  const auto z = airy_eval(0.0);
  const double origin = std::abs(z.bi.value() / (std::sqrt(3.0) * z.ai.value()) - 1.0);
  double wr = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double x = -50.0 + 100.0 * i / 99.0;
    wr = std::max(wr, std::abs(airy_wronskian(airy_eval(x)) * kPi - 1.0));
  }
  std::vector<double> lx;
  std::array<std::vector<double>, 4> ly;
  for (double x : {10.0, 20.0, 40.0, 80.0}) {
    const auto d = airy_asymptotic_deviation(x);
    lx.push_back(std::log(x));
    const std::array<double, 4> e{d.exp_ai, d.exp_bi, d.osc_ai, d.osc_bi};
    for (int k = 0; k < 4; ++k) ly[k].push_back(std::log(e[k]));
  }
  double worst_slope = -INFINITY;
  for (const auto& y : ly) worst_slope = std::max(worst_slope, numerics::linear_fit(lx, y).slope);
  return {origin < 1e-10 && wr < 1e-10 && worst_slope <= -1.4,
          fmt("Bi(0)/sqrt3 Ai(0) error %.1e, Wronskian error %.1e (< 1e-10), largest log-log slope %.3f (<= -1.4)",
              origin, wr, worst_slope)};
}

Outcome allowed_kernel_bound() {
  const auto V = bump_quartic(1.0);
  const auto t = compute_thresholds(V, 0.01);
  std::mt19937_64 rng(1);
  std::string detail;
  bool ok = true;
  for (double h : {0.2, 0.1, 0.05, 0.025}) {
    const LGFrame fr(V, 0.5 * t.M0, h, t.E0, FrameConvention::PlainMomentum);
    const auto lim = default_regime_limits(fr, t);
    std::uniform_real_distribution<double> U(lim.r2_plus, lim.r2_plus + 2.0);
    std::vector<std::pair<double, double>> pairs;
    std::vector<double> nodes;
    for (int i = 0; i < 50; ++i) {
      pairs.emplace_back(U(rng), U(rng));
      nodes.push_back(pairs.back().first);
      nodes.push_back(pairs.back().second);
    }
    std::sort(nodes.begin(), nodes.end());
    const ResolventKernel K(V, fr.m(), h, t.E0, nodes);
    double worst = 0.0;
    for (const auto& [r, rp] : pairs) {
      const auto p = predict_kernel(fr, lim, KernelSetting::NoTurning, r, rp);
      worst = std::max(worst, std::exp(K.outgoing(r, rp).value.log_mag - p.log_mag));
    }
    ok = ok && worst <= 1.0 + 5.0 * h;
    detail += fmt("h=%g: %.4f (<= %.3f) ", h, worst, 1.0 + 5.0 * h);
  }
  return {ok, "max |K|/bound " + detail};
}

Outcome trapped_kernel() {
  const auto& V = trapping_bump();
  const auto t = compute_thresholds(V, kTrapE0);
  std::vector<double> lh, le, rel, ph;
  const auto start = std::chrono::steady_clock::now();
  for (double h : {0.1, 0.05, 0.025, 0.0125}) {
    const auto e = trapped_ground(t, h);
    const LGFrame fr(V, t.M0, h, e.E, FrameConvention::PlainMomentum);
    const auto lim = default_regime_limits(fr, t);
    const double a = lim.r1_plus + 0.3 * (lim.r2_minus - lim.r1_plus);
    const double b = lim.r1_plus + 0.6 * (lim.r2_minus - lim.r1_plus);
    const double R = fr.R_m();
    const double w_from = 1.1 * std::max(R, t.r2);
    std::vector<double> nodes{a, b};
    for (int i = 0; i < 16; ++i) nodes.push_back(w_from + 0.2 * w_from * i / 15.0);
    auto u0 = integrate_dirichlet(V, t.M0, h, e.E, t.r2, 0.99 * a, nodes.back(), nodes);
    const ResolventKernel K(std::move(u0), V, nodes, {}, w_from);
    const auto k = K.outgoing(a, b).value;
    const double S = agmon_distance(fr.vm(), e.E, a, R) + agmon_distance(fr.vm(), e.E, b, R);
    lh.push_back(std::log(h));
    le.push_back(std::log(std::abs(e.E - t.E0)));
    rel.push_back(std::abs(h * k.log_mag / S - 1.0));
    ph.push_back(std::abs(std::remainder(k.phase - 5.0 * kPi / 6.0, 2.0 * kPi)));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double slope = numerics::linear_fit(lh, le).slope;
  bool shrinking = true;
  for (std::size_t i = 1; i < ph.size(); ++i) shrinking = shrinking && ph[i] < ph[i - 1];
  return {slope >= 0.9 && rel.back() < 0.05 && shrinking && secs < 600,
          fmt("(a) slope %.3f (>= 0.9); (b) h log|K| vs S+S' at h=0.0125: %.2f%% (< 5%%); (c) phase error %.3f -> "
              "%.3f -> %.3f -> %.3f (%s); %.0f s",
              slope, 100.0 * rel.back(), ph[0], ph[1], ph[2], ph[3], shrinking ? "decreasing" : "not decreasing",
              secs)};
}

Outcome dichotomy() {
  const auto& V = trapping_bump();
  const auto t = compute_thresholds(V, kTrapE0);
  const double h = 0.05;
  const double half = 0.05 * (t.r2 - t.r1);
  const double mid = 0.5 * (t.r1 + t.r2), far = 1.2 * t.r2;
  const CutoffAnnulus inner{mid - half, mid + half, {}}, outer{far - half, far + half, {}};
  const auto row = lower_bound_experiment(V, 3, t, inner, inner, {h}).front();
  const auto out = full_resolvent_norm(V, 3, h, row.E, outer, outer);
  const double scaled = h * std::exp(out.best.log_norm() - row.log_norm);
  const double dev = std::abs(row.ratio - 1.0);
  return {scaled < 1e-3 && row.measured > 0 && dev < 0.15,
          fmt("h norm(1.2 r2) / norm(mid) = %.2e (< 1e-3); h log norm(mid) = %.4f vs Agmon %.4f, off by %.1f%% (< 15%%)",
              scaled, row.measured, row.predicted, 100.0 * dev)};
}

Outcome resonant_sequence() {
  const auto V = bump_quartic(1.0);
  const auto t = compute_thresholds(V, 0.01);
  const auto seq = resonant_sequence_hj(V, t, 3, 10, 19);
  bool below = seq.size() == 10;
  std::vector<double> gaps;
  for (const auto& s : seq) {
    below = below && s.m <= t.M0 * (1.0 + 1e-12);
    gaps.push_back(s.M0_gap / s.h);
  }
  const bool positive = *std::min_element(gaps.begin(), gaps.end()) > 0;
  const double v = positive ? variation(gaps) : INFINITY;
  return {below && v < 2.0, fmt("m_j <= M0 for j = 10..19: %s; (M0 - m_j)/h_j in [%.4f, %.4f], variation %.3f (< 2)",
                                below ? "yes" : "no", *std::min_element(gaps.begin(), gaps.end()),
                                *std::max_element(gaps.begin(), gaps.end()), v)};
}

Outcome error_control() {
  std::vector<double> totals;
  for (double m : {1.0, 1e2, 1e4}) {
    const LGFrame fr(zero_potential(), m, 0.1, 1.0);
    totals.push_back(error_control_integral(fr, 0.25, 1e-8).total());
  }
  const double v = variation(totals);
  return {v < 3.0, fmt("int |G| = %.4f, %.4f, %.4f; variation %.4f (< 3)", totals[0], totals[1], totals[2], v)};
}

Outcome wave_thresholds() {
  double last = 0.0, worst = 0.0;
  bool increasing = true;
  std::string rc;
  for (double s : {0.3, 0.6, 0.9}) {
    const auto w = rc_threshold(dipped_wavespeed(s));
    increasing = increasing && w.R_c > last;
    last = w.R_c;
    worst = std::max(worst, std::abs(w.R_c - w.r2_equiv) / w.R_c);
    rc += fmt("%.6f ", w.R_c);
  }
  const auto rep = helmholtz_correspondence_check(dipped_wavespeed(0.6), 20.0, {0.5, 0.7, {}},
                                                  {0.3, 0.9, 1.4, 2.5}, 3, 0);
  return {increasing && worst < 1e-8 && rep.max_relative_discrepancy < 1e-6,
          fmt("R_c = %s(%s); |R_c - r2|/R_c <= %.1e (< 1e-8); correspondence at lambda=20: %.1e (< 1e-6)", rc.c_str(),
              increasing ? "increasing" : "not increasing", worst, rep.max_relative_discrepancy)};
}

Outcome wave_dichotomy() {
  const auto c = dipped_wavespeed(0.6);
  const auto w = rc_threshold(c);
  const CutoffAnnulus outside{1.2 * w.R_c, 1.3 * w.R_c, {}};
  std::vector<double> norms;
  for (double lambda : {10.0, 20.0, 40.0, 80.0}) norms.push_back(std::exp(block_resolvent_norm(c, lambda, outside).log_norm));
  const double v = variation(norms);
  const auto V = equivalent_potential(c);
  const auto t = compute_thresholds(V, w.E0);
  const CutoffAnnulus straddle{t.r1, w.R_c, {}};
  std::vector<double> lambdas, logs;
  for (const auto& m : resonant_sequence_hj(V, t, 3, 8, 16)) {
    BlockNormOptions o;
    o.anchored_l = m.j;
    o.direction = Direction::Difference;
    lambdas.push_back(1.0 / m.h);
    logs.push_back(block_resolvent_norm(c, 1.0 / m.h, straddle, o).log_norm);
  }
  const auto fit = numerics::linear_fit(lambdas, logs);
  return {v < 2.0 && fit.slope > 0 && fit.r_squared > 0.9,
          fmt("outside R_c: norm variation %.3f over lambda 10..80 (< 2); straddling at lambda_j = %.2f..%.2f: slope "
              "%.3f (> 0), R^2 %.5f (> 0.9)",
              v, lambdas.front(), lambdas.back(), fit.slope, fit.r_squared)};
}

Outcome infrastructure() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> uA(0.5, 5.0), uE(0.5, 2.0), uh(0.05, 0.2), u01(0.0, 1.0);
  double sym = 0.0, scale = 0.0, wr = 0.0, conj = 0.0;
  bool op_le_hs = true;
  const int cases = 20;
  for (int i = 0; i < cases; ++i) {
    const auto V = bump_quartic(uA(rng));
    const double E = uE(rng), h = uh(rng);
    const auto mode = mode_index(3, static_cast<int>(u01(rng) * 10));
    const double m = mode.m(h);
    std::vector<double> nodes;
    for (int k = 0; k < 20; ++k) nodes.push_back(0.3 + 2.7 * k / 19.0);
    const ResolventKernel K(V, m, h, E, nodes);
    wr = std::max(wr, K.wronskian().max_relative_deviation);
    const auto u0 = K.regular().scaled(LogComplex::from({-3.0 * u01(rng) - 0.1, 2.0}));
    const auto u1 = K.outgoing_solution().scaled(LogComplex::from({0.5, 11.0 * u01(rng) + 0.1}));
    const auto W = wronskian(u0, u1).value;
    for (int k = 0; k < 10; ++k) {
      const double r = 0.3 + 2.7 * u01(rng), rp = 0.3 + 2.7 * u01(rng);
      const auto a = K.outgoing(r, rp).value;
      const auto b = K.outgoing(rp, r).value;
      sym = std::max(sym, relative_difference(a, b));
      conj = std::max(conj, relative_difference(K.incoming(r, rp).value, a.conj()));
      scale = std::max(scale, relative_difference(kernel(u0, u1, W, r, rp).value, a));
    }
    const CutoffAnnulus chi{0.4 + u01(rng), 1.6 + u01(rng), {}};
    ModeNormOptions o;
    o.nystrom_nodes = 96;
    const auto est = mode_resolvent_norm(V, mode, h, E, chi, chi, o);
    op_le_hs = op_le_hs && est.log_op <= est.log_discrete_hs + 1e-12;
  }
  return {sym < 1e-10 && scale < 1e-10 && wr < 1e-6 && conj < 1e-12 && op_le_hs,
          fmt("%d random cases: symmetry %.1e, scale invariance %.1e, Wronskian drift %.1e (< 1e-6), incoming vs "
              "conj %.1e, op <= hs %s",
              cases, sym, scale, wr, conj, op_le_hs ? "holds" : "fails")};
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"threshold identity", threshold_identity},
      {"small-energy scaling", small_energy_scaling},
      {"Airy suite", airy_suite},
      {"allowed/allowed kernel bound", allowed_kernel_bound},
      {"trapped kernel asymptotics", trapped_kernel},
      {"resolvent dichotomy", dichotomy},
      {"resonant sequence h_j", resonant_sequence},
      {"error-control uniform bound", error_control},
      {"wave thresholds", wave_thresholds},
      {"wave block-norm dichotomy", wave_dichotomy},
      {"infrastructure invariants", infrastructure},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += o.passed ? 0 : 1;
    std::printf("%s %2zu %s: %s\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
