#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "rlab/errors.hpp"
#include "rlab/radial_ode.hpp"

using namespace rlab;

namespace {

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(a + (b - a) * i / (n - 1));
  return v;
}

}  // namespace

TEST_CASE("free regular solution is sin(kr)") {
  const double h = 0.1, E = 1.0, k = std::sqrt(E) / h;
  const auto nodes = linspace(0.05, 3.0, 60);
  const auto u0 = integrate_regular(zero_potential(), 0.0, h, E, 3.0, nodes);
  for (double r : nodes) {
    const double s = std::sin(k * r) / k;
    if (std::abs(std::sin(k * r)) < 0.1) continue;
    const auto v = u0.value_at(r);
    CHECK(std::abs(v.to_complex().real() / s - 1.0) < 1e-6);
    CHECK(std::abs(v.to_complex().imag()) < 1e-12);
  }
}

TEST_CASE("indicial exponent near the origin") {
  const double h = 0.1;
  const auto u0 = integrate_regular(zero_potential(), 2.0 * h * h, h, 1.0, 1.0);
  const double r0 = u0.r_lo();
  std::vector<double> x, y;
  for (int i = 0; i <= 10; ++i) {
    const double r = r0 * (1.0 + i / 10.0);
    x.push_back(std::log(r));
    y.push_back(u0.value_at(r).log_mag);
  }
  const double slope = (y.back() - y.front()) / (x.back() - x.front());
  CHECK(slope == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("recessive solution grows through the forbidden core") {
  const auto u0 = integrate_regular(zero_potential(), 1.0, 0.1, 1.0, 1.0);
  for (std::size_t i = 1; i < u0.grid.size(); ++i) CHECK(u0.values[i].log_mag > u0.values[i - 1].log_mag);
  // compare with the closed form: -h^2 u'' + (m/r^2 - 1) u = 0 is a Bessel equation,
  // u = sqrt(r) J_nu(r/h) with nu = sqrt(1/4 + m/h^2)
  const double nu = std::sqrt(0.25 + 100.0);
  const double a = std::sqrt(0.5) * std::cyl_bessel_j(nu, 0.5 / 0.1);
  const double b = std::cyl_bessel_j(nu, 1.0 / 0.1);
  const double ratio_exact = std::log(std::abs(b / a));
  CHECK(u0.value_at(1.0).log_mag - u0.value_at(0.5).log_mag == doctest::Approx(ratio_exact).epsilon(1e-8));
}

TEST_CASE("free outgoing solution is exp(i k r)") {
  const double h = 0.05, E = 2.0, k = std::sqrt(E) / h;
  const auto nodes = linspace(0.1, 2.0, 40);
  const auto u1 = integrate_outgoing(zero_potential(), 0.0, h, E, 0.1, nodes);
  for (double r : nodes) {
    const auto v = u1.value_at(r);
    CHECK(std::abs(v.log_mag) < 1e-8);
    CHECK(std::abs(LogComplex::wrap(v.phase - k * r)) < 1e-8);
  }
}

TEST_CASE("flux constancy of the outgoing solution") {
  const double m = 1.0, h = 0.1, E = 1.0;  // turning point R = 1
  const auto nodes = linspace(10.0, 40.0, 31);
  const auto u1 = integrate_outgoing(zero_potential(), m, h, E, 10.0, nodes);
  double lo = 1e300, hi = -1e300;
  for (double r : nodes) {
    const double f = std::exp(u1.value_at(r).log_mag) * std::pow(E - m / (r * r), 0.25);
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  CHECK(hi / lo - 1.0 < 1e-3);
}

TEST_CASE("free Wronskian and kernel") {
  const double h = 0.1, E = 1.0, k = std::sqrt(E) / h;
  const auto nodes = linspace(0.2, 2.0, 30);
  ResolventKernel K(zero_potential(), 0.0, h, E, nodes);
  // u0 ~ sin(kr)/k, u1 = exp(ikr) => W = -1
  CHECK(std::abs(K.wronskian().value.to_complex() + 1.0) < 1e-8);
  CHECK(K.wronskian().max_relative_deviation < 1e-6);
  for (double r : {0.3, 0.77, 1.4})
    for (double rp : {0.5, 1.9}) {
      const double lo = std::min(r, rp), hi = std::max(r, rp);
      const std::complex<double> expect =
          std::sin(k * lo) * std::polar(1.0, k * hi) / (h * std::sqrt(E));
      CHECK(std::abs(K.outgoing(r, rp).value.to_complex() - expect) < 1e-7 * std::abs(expect) + 1e-9);
    }
}

TEST_CASE("Wronskian bilinearity and consistency") {
  const auto V = bump_quartic(1.0);
  const auto nodes = linspace(0.3, 3.0, 20);
  const auto u0 = integrate_regular(V, 0.05, 0.1, 0.5, 3.0, nodes);
  const auto u1 = integrate_outgoing(V, 0.05, 0.1, 0.5, 0.3, nodes);
  const auto w = wronskian(u0, u1);
  CHECK(w.max_relative_deviation < 1e-6);
  const auto w7 = wronskian(u0.scaled(LogComplex::from_real(7.0)), u1);
  CHECK(w7.value.log_mag - w.value.log_mag == doctest::Approx(std::log(7.0)).epsilon(1e-12));
  // outgoing condition keeps W off the real axis
  CHECK(std::abs(std::sin(w.value.phase)) > 1e-3);
  const auto u1b = integrate_outgoing(V, 0.06, 0.1, 0.5, 0.3, nodes);
  CHECK_THROWS_AS(wronskian(u0, u1b), Error);
}

TEST_CASE("kernel symmetry, conjugation and scale invariance on random pairs") {
  const auto V = bump_quartic(1.0);
  const auto nodes = linspace(0.2, 3.0, 25);
  const double h = 0.1, m = 0.05, E = 0.5;
  ResolventKernel K(V, m, h, E, nodes);
  const auto u0 = K.regular().scaled(LogComplex::from({-3.0, 2.0}));
  const auto u1 = K.outgoing_solution().scaled(LogComplex::from({0.5, 11.0}));
  const auto w = wronskian(u0, u1);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(0.2, 3.0);
  for (int i = 0; i < 100; ++i) {
    const double r = dist(rng), rp = dist(rng);
    const auto a = K.outgoing(r, rp).value;
    const auto b = K.outgoing(rp, r).value;
    CHECK(std::abs(a.log_mag - b.log_mag) < 1e-10);
    CHECK(std::abs(LogComplex::wrap(a.phase - b.phase)) < 1e-10);
    const auto in = K.incoming(r, rp).value;
    CHECK(relative_difference(in, a.conj()) < 1e-12);
    CHECK(relative_difference(kernel(u0, u1, w.value, r, rp).value, a) < 1e-10);
  }
}

TEST_CASE("moving the outgoing start only rescales") {
  const auto V = bump_quartic(1.0);
  const auto nodes = linspace(0.5, 4.0, 20);
  const double h = 0.1, m = 0.05, E = 0.5;
  ResolventKernel a(V, m, h, E, nodes);
  IntegrationOptions opt;
  opt.outgoing_start_min = 2.0 * outgoing_start_radius(EffectivePotential(V, m), h, E, 0.5);
  ResolventKernel b(V, m, h, E, nodes, opt);
  for (double r : {0.6, 1.5, 3.3})
    CHECK(relative_difference(a.outgoing(r, 3.9).value, b.outgoing(r, 3.9).value) < 1e-6);
}

TEST_CASE("tolerance refinement") {
  const auto V = bump_quartic(1.0);
  const auto nodes = linspace(0.5, 4.0, 20);
  IntegrationOptions fine;
  fine.rtol = 1e-11;
  ResolventKernel a(V, 0.05, 0.05, 0.5, nodes);
  ResolventKernel b(V, 0.05, 0.05, 0.5, nodes, fine);
  CHECK(std::abs(a.outgoing(0.7, 3.1).value.log_mag - b.outgoing(0.7, 3.1).value.log_mag) < 1e-6);
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(integrate_outgoing(zero_potential(), 1.0, 0.1, -1.0, 0.5), Error);
  const auto u0 = integrate_regular(zero_potential(), 0.0, 0.1, 1.0, 2.0);
  CHECK_THROWS_AS(u0.value_at(3.0), Error);
  std::ostringstream csv;
  write_solution_csv(u0, csv);
  CHECK(csv.str().rfind("r,log_abs_u,phase_u,log_abs_hdu,phase_hdu\n", 0) == 0);
}

TEST_CASE("Dirichlet-anchored solution") {
  const double h = 0.1, E = 1.0, k = std::sqrt(E) / h, rd = 1.3;
  const auto nodes = linspace(0.5, 2.5, 21);
  const auto u = integrate_dirichlet(zero_potential(), 0.0, h, E, rd, 0.4, 2.6, nodes);
  CHECK(u.boundary_kind == BoundaryKind::DirichletEigenfunction);
  CHECK(u.r_lo() == doctest::Approx(0.4));
  CHECK(u.r_hi() == doctest::Approx(2.6));
  CHECK(std::is_sorted(u.grid.begin(), u.grid.end()));
  CHECK(std::adjacent_find(u.grid.begin(), u.grid.end()) == u.grid.end());
  for (double r : nodes) {
    const double expect = std::sin(k * (r - rd)) / (h * k);
    CHECK(std::abs(u.value_at(r).to_complex().real() - expect) < 1e-7);
  }
  CHECK(u.value_at(rd).is_zero());
  CHECK_THROWS_AS(integrate_dirichlet(zero_potential(), 0.0, h, E, 3.0, 0.4, 2.6), Error);
}
