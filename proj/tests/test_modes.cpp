#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "rlab/errors.hpp"
#include "rlab/modes.hpp"
#include "rlab/potential.hpp"

using namespace rlab;

namespace {

const RadialPotential& trapping_bump() {
  static const RadialPotential V = bump_quartic(1000.0);
  return V;
}
constexpr double kTrapE0 = 100.0;

// int int_{[a,b]^2} sin^2(k min(r, r')) dr dr'
double free_square(double k, double a, double b) {
  return 2.0 * ((b - a) * (b - a) / 4.0 + (b - a) * std::sin(2.0 * k * a) / (4.0 * k) -
                (std::cos(2.0 * k * a) - std::cos(2.0 * k * b)) / (8.0 * k * k));
}

double free_strip(double k, double a, double b) {
  return 0.5 * (b - a) - (std::sin(2.0 * k * b) - std::sin(2.0 * k * a)) / (4.0 * k);
}

CutoffAnnulus around(double c, double half) { return {c - half, c + half, {}}; }

}  // namespace

TEST_CASE("sphere spectrum") {
  const auto s2 = sphere_spectrum(2, 4);
  for (int l = 0; l <= 4; ++l) {
    CHECK(s2[l].sigma == l * l);
    CHECK(s2[l].multiplicity == (l == 0 ? 1 : 2));
  }
  const auto s3 = sphere_spectrum(3, 5);
  for (int l = 0; l <= 5; ++l) {
    CHECK(s3[l].sigma == l * (l + 1));
    CHECK(s3[l].multiplicity == 2 * l + 1);
    CHECK(s3[l].m(0.1) == doctest::Approx(0.01 * l * (l + 1)));
  }
  const auto s4 = sphere_spectrum(4, 5);
  for (int l = 0; l <= 5; ++l) CHECK(s4[l].multiplicity == (l + 1) * (l + 1));
  for (int n : {2, 3, 5})
    for (const auto& k : sphere_spectrum(n, 6)) CHECK(k.m(0.3) >= -0.3 * 0.3 / 4.0 - 1e-15);
  CHECK_THROWS_AS(sphere_spectrum(1, 2), Error);
}

TEST_CASE("free Hilbert-Schmidt norm matches the closed form") {
  const double h = 0.1, E = 1.0, k = std::sqrt(E) / h;
  const auto mode = mode_index(3, 0);
  const CutoffAnnulus A{1.0, 2.0, {}}, B{2.5, 3.0, {}};
  const auto same = mode_resolvent_norm(zero_potential(), mode, h, E, A, A);
  CHECK(std::exp(same.log_hs) ==
        doctest::Approx(std::sqrt(free_square(k, 1.0, 2.0) / (h * h * E))).epsilon(1e-6));
  const auto apart = mode_resolvent_norm(zero_potential(), mode, h, E, A, B);
  CHECK(std::exp(apart.log_hs) ==
        doctest::Approx(std::sqrt(0.5 * free_strip(k, 1.0, 2.0) / (h * h * E))).epsilon(1e-6));
  for (const auto* e : {&same, &apart}) {
    CHECK(e->log_op <= e->log_discrete_hs);
    CHECK(e->power_iteration_converged);
  }
}

TEST_CASE("Nystrom convergence and direction symmetry") {
  const auto& V = trapping_bump();
  const double h = 0.1;
  const CutoffAnnulus A{1.1, 1.4, {}};
  for (int l : {0, 50, 120}) {
    ModeNormOptions o;
    const auto base = mode_resolvent_norm(V, mode_index(3, l), h, kTrapE0, A, A, o);
    o.nystrom_nodes = 512;
    const auto fine = mode_resolvent_norm(V, mode_index(3, l), h, kTrapE0, A, A, o);
    CHECK(std::abs(std::expm1(fine.log_op - base.log_op)) < 5e-3);
    CHECK(base.log_op <= base.log_discrete_hs);
    o.nystrom_nodes = 256;
    o.direction = Direction::Incoming;
    const auto in = mode_resolvent_norm(V, mode_index(3, l), h, kTrapE0, A, A, o);
    CHECK(in.log_op == doctest::Approx(base.log_op).epsilon(1e-10));
    CHECK(in.log_hs == doctest::Approx(base.log_hs).epsilon(1e-10));
  }
}

TEST_CASE("mode supremum over a two-mode toy") {
  const auto& V = trapping_bump();
  const double h = 0.1;
  const CutoffAnnulus A{1.1, 1.4, {}};
  TruncationPolicy p;
  p.l_max_override = 1;
  const auto full = full_resolvent_norm(V, 3, h, kTrapE0, A, A, p);
  REQUIRE(full.per_mode.size() == 2);
  const double m0 = mode_resolvent_norm(V, mode_index(3, 0), h, kTrapE0, A, A).log_norm();
  const double m1 = mode_resolvent_norm(V, mode_index(3, 1), h, kTrapE0, A, A).log_norm();
  CHECK(full.best.log_norm() == std::max(m0, m1));
}

TEST_CASE("truncation certificate") {
  const auto& V = trapping_bump();
  const double h = 0.2;
  const CutoffAnnulus A{1.1, 1.4, {}};
  const auto full = full_resolvent_norm(V, 3, h, kTrapE0, A, A);
  CHECK(full.log_bound_at_stop < full.best.log_norm());
  CHECK(std::isfinite(full.log_bound_at_stop));
  CHECK(full.l_stop + 1 == static_cast<int>(full.per_mode.size()));
  TruncationPolicy tight;
  tight.l_hard_cap = 5;
  CHECK_THROWS_AS(full_resolvent_norm(V, 3, h, kTrapE0, A, A, tight), Error);
}

TEST_CASE("nontrapping cutoffs: h times the norm stays bounded") {
  const auto& V = trapping_bump();
  const auto t = compute_thresholds(V, kTrapE0);
  const auto A = around(1.2 * t.r2, 0.05 * (t.r2 - t.r1));
  double lo = 1e300, hi = 0.0;
  for (double h : {0.2, 0.1, 0.05}) {
    const auto full = full_resolvent_norm(V, 3, h, kTrapE0, A, A);
    const double scaled = h * std::exp(full.best.log_norm());
    lo = std::min(lo, scaled);
    hi = std::max(hi, scaled);
  }
  CHECK(hi / lo < 3.0);
}

TEST_CASE("lower bound: measured exponent approaches the Agmon prediction") {
  const auto& V = trapping_bump();
  const auto t = compute_thresholds(V, kTrapE0);
  const auto A = around(0.5 * (t.r1 + t.r2), 0.05 * (t.r2 - t.r1));
  const auto rows = lower_bound_experiment(V, 3, t, A, A, {0.1, 0.05, 0.025});
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].log_norm > 0.0);
    CHECK(rows[i].log_norm_incoming == doctest::Approx(rows[i].log_norm).epsilon(1e-12));
    CHECK(std::abs(rows[i].m - t.M0) <= 2.0 * std::sqrt(t.M0) * rows[i].h);
    if (i > 0) CHECK(std::abs(rows[i].ratio - 1.0) < std::abs(rows[i - 1].ratio - 1.0));
  }
  CHECK(std::abs(rows.back().ratio - 1.0) < 0.1);
  CHECK_THROWS_AS(lower_bound_experiment(V, 3, t, around(1.5, 0.1), A, {0.1}), Error);
}

TEST_CASE("fixed-energy sequence variant") {
  const auto V = bump_quartic(1.0);
  const auto t = compute_thresholds(V, 0.01);
  const auto A = around(0.5 * (t.r1 + t.r2), 0.05 * (t.r2 - t.r1));
  const auto rows = lower_bound_sequence(V, 3, t, A, A, 10, 11);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.E == t.E0);
    CHECK(r.m <= t.M0);
    CHECK(std::isfinite(r.log_norm));
    CHECK(r.log_norm_incoming == doctest::Approx(r.log_norm).epsilon(1e-12));
  }
  const auto P = parabola(1.0, 0.5, 0.0);
  CHECK_THROWS_AS(lower_bound_sequence(P, 3, t, A, A, 1, 2), Error);
}

TEST_CASE("Chebyshev energies and invalid annuli") {
  const auto e = chebyshev_energies(1.0, 2.0, 33);
  REQUIRE(e.size() == 33);
  CHECK(std::is_sorted(e.begin(), e.end()));
  CHECK(e.front() > 1.0);
  CHECK(e.back() < 2.0);
  CHECK(e[16] == doctest::Approx(1.5));
  const CutoffAnnulus bad{2.0, 1.0, {}};
  try {
    mode_resolvent_norm(zero_potential(), mode_index(3, 0), 0.1, 1.0, bad, bad);
    FAIL("expected SupportViolated");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::SupportViolated);
  }
}
