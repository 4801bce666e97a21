#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "rlab/asymptotics.hpp"
#include "rlab/errors.hpp"
#include "rlab/numerics.hpp"
#include "rlab/spectral.hpp"

using namespace rlab;

namespace {

constexpr double kPi = std::numbers::pi;

// E0 / A = 0.1 keeps the well state at r1 below the states that sit against
// the Dirichlet wall at r2 for every h used here.
const RadialPotential& trapping_bump() {
  static const RadialPotential V = bump_quartic(1000.0);
  return V;
}
constexpr double kTrapE0 = 100.0;

EigenResult ground(const ThresholdData& t, double h) {
  const auto q = default_quasimode(trapping_bump(), t);
  const double rq = rayleigh_quotient_bound(trapping_bump(), t.M0, h, q, t.r2);
  return dirichlet_ground_energy(trapping_bump(), t.M0, h, t.E0, t.E0 + 1.5 * (rq - t.E0), t.r2);
}

}  // namespace

TEST_CASE("node count of the free solution") {
  const double h = 0.1, E = 1.0, k = std::sqrt(E) / h;
  const auto u = integrate_regular(zero_potential(), 0.0, h, E, 2.05);
  CHECK(count_nodes(u) == static_cast<int>(std::floor(k * 2.05 / kPi)));
}

TEST_CASE("harmonic reference: ground energy and quasimode") {
  const double alpha = 1.0, E0 = 0.5;
  const auto P = parabola(alpha, 1.0, E0);
  const double h = 0.01;
  const auto e = dirichlet_ground_energy(P, 0.0, h, E0, E0 + 2.0 * alpha * h, 2.0);
  CHECK(e.node_count == 0);
  CHECK(e.residual < 1e-10);
  CHECK(std::abs((e.E - E0) / (alpha * h) - 1.0) < 0.05);
  QuasimodeParams q;
  q.alpha = alpha;
  q.r1 = 1.0;
  q.cutoff = {1.0, 0.5};
  const double rq = rayleigh_quotient_bound(P, 0.0, h, q, 2.0);
  CHECK(std::abs((rq - E0) / (alpha * h) - 1.0) < 0.1);
  CHECK(rq >= e.E - 1e-10);
}

TEST_CASE("shooting window errors") {
  const auto P = parabola(1.0, 1.0, 0.5);
  const double h = 0.04;
  try {
    dirichlet_ground_energy(P, 0.0, h, 0.5, 0.5 + 0.5 * h, 2.0);
    FAIL("expected NoSignChange");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoSignChange);
  }
  try {
    dirichlet_ground_energy(P, 0.0, h, 0.5 + 3.5 * h, 0.5 + 4.5 * h, 2.0);
    FAIL("expected NotGroundState");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotGroundState);
  }
  QuasimodeParams q;
  q.alpha = 1.0;
  q.r1 = 1.0;
  q.cutoff = {1.0, 1.2};
  CHECK_THROWS_AS(rayleigh_quotient_bound(P, 0.0, h, q, 2.0), Error);
}

TEST_CASE("trapped ground energy is E0 + O(h)") {
  const auto t = compute_thresholds(trapping_bump(), kTrapE0);
  const auto q = default_quasimode(trapping_bump(), t);
  std::vector<double> lh, le, lq;
  for (double h : {0.1, 0.05, 0.025}) {
    const auto e = ground(t, h);
    const double rq = rayleigh_quotient_bound(trapping_bump(), t.M0, h, q, t.r2);
    CHECK(e.node_count == 0);
    CHECK(e.E > t.E0);
    CHECK(e.E <= rq + 1e-10 * t.E0);
    lh.push_back(std::log(h));
    le.push_back(std::log(e.E - t.E0));
    lq.push_back(std::log(rq - t.E0));
  }
  CHECK(numerics::linear_fit(lh, le).slope >= 0.9);
  CHECK(numerics::linear_fit(lh, lq).slope == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("eigenfunction connection coefficients and Wronskian in the trapped setting") {
  const auto t = compute_thresholds(trapping_bump(), kTrapE0);
  std::vector<double> a_err, w_err;
  for (double h : {0.1, 0.05, 0.025}) {
    const auto e = ground(t, h);
    const LGFrame fr(trapping_bump(), t.M0, h, e.E, FrameConvention::PlainMomentum);
    const auto lim = default_regime_limits(fr, t);
    std::vector<double> nodes;
    for (int i = 0; i < 14; ++i) nodes.push_back(lim.r2_plus + 0.1 * i);
    const auto u0 = integrate_dirichlet(trapping_bump(), t.M0, h, e.E, t.r2, lim.r1_plus,
                                        nodes.back(), nodes);
    const auto fit = connection_coefficients(u0, fr);
    const auto n0 = normalize_real_fit(fit);
    CHECK(std::abs(fit.A.imag()) + std::abs(fit.B.imag()) < 1e-12 * std::abs(fit.A));
    a_err.push_back(std::hypot(n0.A.real() - std::sqrt(3.0) / 2.0, n0.B.real() + 0.5));

    const double scale = std::hypot(fit.A.real(), fit.B.real()) * (fit.A.real() >= 0 ? 1.0 : -1.0);
    const auto u0n = u0.scaled(LogComplex::from_real(1.0 / scale, -fit.log_scale));
    const auto u1 = normalize_outgoing(integrate_outgoing(trapping_bump(), t.M0, h, e.E, nodes.front(), nodes), fr);
    const auto W = wronskian(u0n, u1).value;
    CHECK(std::exp(W.log_mag) * h * std::sqrt(kPi) == doctest::Approx(1.0).epsilon(1e-3));
    w_err.push_back(std::abs(LogComplex::wrap(W.phase - 11.0 * kPi / 12.0)));
  }
  CHECK(a_err[1] < a_err[0]);
  CHECK(a_err[2] < a_err[1]);
  CHECK(w_err[1] < w_err[0]);
  CHECK(w_err[2] < w_err[1]);
}

TEST_CASE("resonant sequence h_j") {
  const auto V = bump_quartic(1.0);
  const auto t = compute_thresholds(V, 0.01);
  const auto seq = resonant_sequence_hj(V, t, 3, 10, 19);
  REQUIRE(seq.size() == 10);
  double lo = 1e300, hi = 0.0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto& s = seq[i];
    CHECK(s.m <= t.M0 * (1.0 + 1e-12));
    CHECK(s.m == doctest::Approx(s.h * s.h * (s.sigma + 0.0)).epsilon(1e-12));
    CHECK_FALSE(s.self_adjointness_window);
    CHECK(s.residual < 1e-10);
    if (i > 0) CHECK(s.h < seq[i - 1].h);
    lo = std::min(lo, s.M0_gap / s.h);
    hi = std::max(hi, s.M0_gap / s.h);
  }
  CHECK(lo > 0.0);
  CHECK(hi / lo < 2.0);

  const auto low = resonant_sequence_hj(V, t, 2, 0, 0);
  CHECK(low[0].self_adjointness_window);
  CHECK(std::isnan(low[0].h));
  CHECK_THROWS_AS(resonant_sequence_hj(parabola(1.0, 0.0, 0.0), t, 3, 1, 2), Error);
}
